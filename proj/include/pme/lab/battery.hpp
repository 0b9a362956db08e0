#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pme/lab/report.hpp"

namespace pme::lab {

/// Thresholds of the acceptance battery, keyed "c<id>.<name>".
using BatteryTolerances = std::map<std::string, double>;

BatteryTolerances default_battery_tolerances();

struct BatteryOptions {
  /// Criterion selector: empty runs everything, otherwise a criterion id
  /// ("7") or a substring of its name ("shift").
  std::string filter;
  std::filesystem::path out_dir;  ///< empty: no files are written
  std::uint64_t seed{1000};       ///< base seed of the randomized invariants
  /// Overrides applied on top of the defaults. Unknown keys throw ConfigInvalid.
  std::map<std::string, double> overrides;
  unsigned threads{0};            ///< 0: hardware concurrency; PME_LAB_THREADS caps either way
};

struct CriterionResult {
  int id{};
  std::string name;
  std::vector<Check> checks;
  std::string error;  ///< module failure that aborted the criterion
  double seconds{};

  bool pass() const;
};

struct BatteryReport {
  std::vector<CriterionResult> criteria;  ///< ascending id
  bool pass() const;
};

/// Names of all criteria, index i holding criterion i + 1.
const std::vector<std::string>& criterion_names();

/// min(requested or hardware concurrency, PME_LAB_THREADS, jobs), at least 1.
unsigned worker_count(unsigned requested, std::size_t jobs);

/**
 * Runs the acceptance criteria in a worker pool. Module failures become
 * criterion failures; the battery itself never aborts. With an output
 * directory, report.csv and per-criterion data files are written there;
 * their content depends only on the options.
 */
BatteryReport battery(const BatteryOptions& opts);

/// One line per criterion: "[PASS] 3 second_eigenvalue (2/2 checks)" and
/// indented lines for failing checks.
std::string format_battery(const BatteryReport& report);

}  // namespace pme::lab

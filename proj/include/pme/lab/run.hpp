#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "pme/lab/config.hpp"
#include "pme/lab/report.hpp"

namespace pme::lab {

inline constexpr const char* kRunFormat = "pme-lab-run/1";

struct Artifact {
  std::string experiment;
  std::filesystem::path path;  ///< relative to the output directory
};

struct StepStats {
  std::size_t steps{};
  std::size_t newton_iterations{};
  std::size_t halvings{};
};

struct RunRecord {
  ExperimentConfig config;
  std::string config_text;
  std::uint64_t config_hash{};
  std::vector<Artifact> artifacts;
  std::vector<Check> checks;
  std::vector<std::pair<std::string, double>> summary;
  StepStats steps;
  double wall_seconds{};
  bool failed{false};
  std::string failure;  ///< module error message when failed

  bool checks_pass() const;
  /// 0 pass, 3 numerical failure, 4 acceptance failure.
  int exit_code() const;
};

/**
 * Runs the configured experiments in dependency order
 * (stationary → spectrum → evolve → asymptotics/regularity) and writes
 * profile.csv, spectrum.csv, trajectory.csv, trajectory_rescaled.csv,
 * asymptotics.csv, report.csv and run.json into the output directory.
 *
 * Module errors do not propagate: the record is marked failed, artifacts
 * written so far are kept and a FAILED file holds the message. Throws
 * ConfigInvalid for an invalid config or an unusable output directory.
 */
RunRecord run(const ExperimentConfig& cfg);

}  // namespace pme::lab

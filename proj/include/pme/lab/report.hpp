#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pme/evolution.hpp"

namespace pme::lab {

enum class Relation { near, at_most, at_least };

/**
 * One acceptance check. `near` passes when |measured - target| <= tolerance,
 * `at_most` when measured <= target, `at_least` when measured >= target.
 * A non-finite measurement never passes.
 */
struct Check {
  std::string criterion;
  Relation relation{Relation::near};
  double target{};
  double tolerance{};
  double measured{};

  bool pass() const;
};

Check near(std::string criterion, double target, double tolerance, double measured);
Check at_most(std::string criterion, double bound, double measured);
Check at_least(std::string criterion, double bound, double measured);

/// Rectangular numeric table with named columns.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// Comma-separated, header line first, numbers in shortest round-trip form.
void write_csv(const std::filesystem::path& path, const Table& table);
/// Whitespace-separated with a '#' header line (gnuplot data file).
void write_dat(const std::filesystem::path& path, const Table& table);
Table read_csv(const std::filesystem::path& path);

/// report.csv: criterion,target,measured,tolerance,pass.
void write_report(const std::filesystem::path& path, const std::vector<Check>& checks);

/// Long form (stamp, node, value); node is the 0-based grid index.
void write_trajectory(const std::filesystem::path& path, const Trajectory& traj);
/// Inverse of write_trajectory; grid, variable and exponent come from the caller.
Trajectory read_trajectory(const std::filesystem::path& path, const Grid& grid, Variable variable,
                           double exponent);

std::string format_number(double v);

}  // namespace pme::lab

#include <cstdio>
#include <string>

#include <fmt/format.h>

#include "pme/lab/battery.hpp"

// Runs every acceptance criterion at its pinned tolerance.
// Usage: pme_acceptance [output-dir]
int main(int argc, char** argv) {
  pme::lab::BatteryOptions opts;
  if (argc > 1) opts.out_dir = argv[1];
  const pme::lab::BatteryReport report = pme::lab::battery(opts);

  int failed = 0;
  for (const auto& c : report.criteria) {
    std::size_t passing = 0;
    for (const auto& check : c.checks) passing += check.pass();
    fmt::print("{} criterion {:>2} {:<22} {}/{} checks  {:.1f}s\n", c.pass() ? "PASS" : "FAIL", c.id,
               c.name, passing, c.checks.size(), c.seconds);
    if (!c.error.empty()) fmt::print("     error: {}\n", c.error);
    for (const auto& check : c.checks)
      if (!check.pass())
        fmt::print("     {} measured {:.6g} target {:.6g} tolerance {:.3g}\n", check.criterion,
                   check.measured, check.target, check.tolerance);
    failed += !c.pass();
  }
  fmt::print("{} of {} criteria passed\n", report.criteria.size() - failed, report.criteria.size());
  std::fflush(stdout);
  return failed == 0 ? 0 : 1;
}

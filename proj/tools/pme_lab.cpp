#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "pme/error.hpp"
#include "pme/lab/battery.hpp"
#include "pme/lab/run.hpp"
#include "pme/stationary.hpp"

namespace {

constexpr int kPass = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalFailure = 3;
constexpr int kAcceptanceFailure = 4;

int cmd_run(const std::string& path) {
  const pme::lab::ExperimentConfig cfg = pme::lab::load_config(path);
  const pme::lab::RunRecord rec = pme::lab::run(cfg);
  fmt::print("run {} -> {} (config {:016x})\n", path, cfg.output_dir.string(), rec.config_hash);
  for (const auto& [key, value] : rec.summary) fmt::print("  {:<24} {:.10g}\n", key, value);
  for (const auto& c : rec.checks)
    fmt::print("  [{}] {} measured {:.6g}\n", c.pass() ? "PASS" : "FAIL", c.criterion, c.measured);
  if (rec.failed) fmt::print(stderr, "numerical failure: {}\n", rec.failure);
  return rec.exit_code();
}

int cmd_battery(const std::string& filter, const std::string& out, std::uint64_t seed,
                const std::vector<std::string>& sets) {
  pme::lab::BatteryOptions opts;
  opts.filter = filter;
  opts.out_dir = out;
  opts.seed = seed;
  for (const std::string& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw pme::ConfigInvalid(fmt::format("--set expects key=value, got '{}'", s));
    try {
      opts.overrides[s.substr(0, eq)] = std::stod(s.substr(eq + 1));
    } catch (const std::logic_error&) {
      throw pme::ConfigInvalid(fmt::format("--set {}: not a number", s));
    }
  }
  const pme::lab::BatteryReport report = pme::lab::battery(opts);
  fmt::print("{}", pme::lab::format_battery(report));
  return report.pass() ? kPass : kAcceptanceFailure;
}

int cmd_oracle(double p, int points) {
  const pme::ThetaOracle1D o = pme::theta_oracle_1d(p);
  fmt::print("p          {:.17g}\n", o.p);
  fmt::print("theta_max  {:.17g}\n", o.theta_max);
  fmt::print("energy     {:.17g}\n", o.energy);
  fmt::print("slope      {:.17g}\n", o.slope);
  fmt::print("# x theta\n");
  for (int i = 0; i <= points; ++i) {
    const double x = double(i) / points;
    fmt::print("{:.6f} {:.17g}\n", x, o.sample(x));
  }
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Porous-medium-equation laboratory"};
  app.require_subcommand(1);

  std::string config;
  auto* run = app.add_subcommand("run", "Run the experiments of a config file");
  run->add_option("config", config, "Config file")->required();

  std::string filter, out;
  std::uint64_t seed = 1000;
  std::vector<std::string> sets;
  auto* bat = app.add_subcommand("battery", "Run the acceptance battery");
  bat->add_option("--filter", filter, "Criterion id or name substring");
  bat->add_option("--out", out, "Directory for report.csv and data files");
  bat->add_option("--seed", seed, "Base seed of the randomized invariants");
  bat->add_option("--set", sets, "Override a tolerance, key=value (repeatable)");

  double p = 0.5;
  int points = 20;
  auto* oracle = app.add_subcommand("oracle", "Reference solutions");
  auto* theta = oracle->add_subcommand("theta", "First-integral profile on (0, 1)");
  oracle->require_subcommand(1);
  theta->add_option("--p", p, "Exponent p = 1/m in (0, 1)")->required();
  theta->add_option("--points", points, "Table intervals")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfigError;
  }

  try {
    if (*run) return cmd_run(config);
    if (*bat) return cmd_battery(filter, out, seed, sets);
    if (*theta) return cmd_oracle(p, points);
  } catch (const pme::ConfigInvalid& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kConfigError;
  } catch (const pme::InvalidArgument& e) {
    fmt::print(stderr, "invalid argument: {}\n", e.what());
    return kConfigError;
  } catch (const pme::Error& e) {
    fmt::print(stderr, "numerical failure: {}\n", e.what());
    return kNumericalFailure;
  }
  return kConfigError;
}

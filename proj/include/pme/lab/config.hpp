#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "pme/evolution.hpp"
#include "pme/geometry.hpp"

namespace pme::lab {

enum class Experiment { stationary, spectrum, evolve, asymptotics, regularity };

const char* to_string(Experiment e);

struct DomainConfig {
  GridKind kind{GridKind::interval};
  int dim{1};
  double size{1.0};  ///< interval length or ball radius
};

struct InitialConfig {
  enum class Kind { separable, bump, profile, file } kind{Kind::separable};
  double s{1.0};  ///< separable: u0 = s^{-1/(m-1)} S
  double center{0.5};
  double width{0.1};
  double height{1.0};
  double c{1.0};  ///< profile: u0 = c S
  std::string path;
};

struct ScheduleConfig {
  Schedule::Kind kind{Schedule::Kind::fixed};
  double dt{1e-3};   ///< fixed step, or the smallest step of a geometric schedule
  double rho{1.05};
  double t_end{1.0};
  int store_every{1};
};

struct ToleranceConfig {
  double stationary{1e-10};  ///< Newton residual for Θ
  double eigen{1e-9};        ///< eigenpair residual
  double step{1e-12};        ///< per-step Newton residual (relative)
  double oracle{1e-4};       ///< ‖Θ_h - Θ_oracle‖_∞
  double mu{1e-3};           ///< |μ_1 - p|
  double mu2_rel{1e-2};      ///< relative error of μ_2 on intervals
  double separable{1e-3};    ///< relative error against the separable solution
  double rate{0.2};          ///< decay slopes
  double shift{0.05};        ///< relative error of τ* for separable data
  double exponent{0.02};     ///< relative error of boundary exponents and coefficients
};

struct AsymptoticsConfig {
  double t_handoff{1.0};
  double tau_end{16.0};
  double dtau{2e-3};
  int store_every{5};
  std::size_t K{4};
  double fit_lo{2.0};
  double fit_hi{10.0};
  double tail_lo{12.0};
  double tail_hi{16.0};
};

/**
 * A single experiment run. Text form (comments start with ';' or '#'):
 *
 *   m = 2
 *   N = 800
 *   experiments = stationary, spectrum
 *   output_dir = runs/demo
 *   [domain]
 *   kind = interval
 *   length = 1
 *
 * Top-level keys: m, N, seed, experiments, output_dir, resume_from.
 * Sections: domain, initial, schedule, tolerances, asymptotics.
 */
struct ExperimentConfig {
  double m{2.0};
  DomainConfig domain;
  std::size_t N{400};
  InitialConfig initial;
  ScheduleConfig schedule;
  std::vector<Experiment> experiments;
  ToleranceConfig tol;
  AsymptoticsConfig asymptotics;
  std::filesystem::path output_dir{"pme-run"};
  std::filesystem::path resume_from;  ///< earlier run directory whose trajectories are reused
  std::uint64_t seed{0};

  bool wants(Experiment e) const;
};

/// Throws ConfigInvalid on syntax errors, unknown keys and violated invariants.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical text form: every field, fixed order, round-trip number format.
std::string serialize(const ExperimentConfig& cfg);

/// FNV-1a of the canonical text form.
std::uint64_t config_hash(const ExperimentConfig& cfg);

/// Throws ConfigInvalid. Called by parse_config; exposed for hand-built configs.
void validate(const ExperimentConfig& cfg);

Grid make_grid(const ExperimentConfig& cfg);

}  // namespace pme::lab

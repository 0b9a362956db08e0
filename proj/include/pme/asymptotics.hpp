#pragma once

#include <vector>

#include "pme/evolution.hpp"
#include "pme/spectrum.hpp"
#include "pme/stationary.hpp"

namespace pme {

/// θ(x,τ) = t^{m/(m-1)} u^m(x,t), τ = log t. Throws InvalidArgument for stamps t <= 0.
Trajectory rescale_trajectory(const Trajectory& u_traj);

/// β_j(τ_k) = ⟨θ(·,τ_k) - Θ, ψ_j⟩ with the eigen-system's weight.
struct ModeProjection {
  std::vector<double> tau;
  std::vector<std::vector<double>> beta;  ///< beta[j][k], j = 0..K-1
  std::vector<double> norm_h;
  std::vector<double> tail_norm;          ///< ‖h - Σ β_j ψ_j‖
};

ModeProjection project_modes(const Trajectory& theta_traj, const StationaryProfile& profile,
                             const EigenSystem& sys, std::size_t K);

struct ModeConstants {
  std::vector<double> c;      ///< c_j for j < J
  std::vector<double> drift;  ///< |mean over first half - mean over second half|
  std::size_t J{};            ///< number of modes with μ_j/p < 2
  double lo{}, hi{};
};

/// c_j = mean of e^{μ_j τ/p} β_j(τ) over τ ∈ [lo, hi]. Throws NotConverged if
/// the drift exceeds 10% of |c_j| (drifts below `abs_floor` are ignored).
ModeConstants extract_cj(const ModeProjection& proj, const std::vector<double>& mus, double p,
                         double lo, double hi, double abs_floor = 1e-9);

struct ShiftConstants {
  double A1{};
  double tau_star{};
  bool sign_warning{false};  ///< c_1 > 0 was supplied
};

/// A_1 = -c_1/‖Θ‖, τ* = (m-1) A_1 / m.
ShiftConstants compute_A1_tau_star(double c1, const StationaryProfile& profile);

struct DecayFit {
  double slope{};
  double stderr_slope{};
  double intercept{};
  std::size_t samples{};
};

/// Least-squares slope of log(value) against x over x ∈ [lo, hi]. With
/// `log_correction` the fitted quantity is log(value) - log(x).
/// Throws InvalidArgument (< 12 samples, value <= 0) or DegenerateFit.
DecayFit fit_decay_rate(const std::vector<double>& x, const std::vector<double>& value, double lo,
                        double hi, bool log_correction = false);

/// (1+x)^p - 1 - p x without cancellation for small x.
double nonlinear_excess(double x, double p);

/// N(h) nodewise for h = θ - Θ and its τ-derivative.
Field residual_N(std::span<const double> theta, std::span<const double> theta_tau,
                 const StationaryProfile& profile);

/// sup_x |N(h)| / Θ^p at every stored stamp, h_τ by 3-point differences on
/// the (possibly non-uniform) stamps, one-sided at the ends.
std::vector<double> residual_N_series(const Trajectory& theta_traj,
                                      const StationaryProfile& profile);

/// ‖u/U - 1‖_∞ = max_x |(θ/Θ)^p - 1|.
double relative_deviation(std::span<const double> theta, const StationaryProfile& profile);

struct AsymptoticsOptions {
  double fit_lo = 2.0;
  double fit_hi = 10.0;
  double tail_lo = 12.0;  ///< window for c_j extraction
  double tail_hi = 16.0;
  std::size_t K = 4;
};

struct AsymptoticsReport {
  ModeConstants modes;
  double A1{};
  double tau_star{};
  bool sign_warning{false};
  DecayFit fit_h;          ///< log ‖h‖ vs τ
  DecayFit fit_remainder;  ///< log ‖h + A_1 e^{-τ} Θ‖ vs τ
  DecayFit fit_N;          ///< log sup|N|/Θ^p vs τ
  DecayFit fit_deviation;  ///< log ‖u/U - 1‖_∞ vs τ (= log t)
  double gamma{};
  bool log_correction{false};
  bool residual_bound_ok{false};  ///< |slope_N + 2| <= 0.3
  double fit_lo{}, fit_hi{};

  // Per-stamp series, aligned with `projection.tau`.
  ModeProjection projection;
  std::vector<double> remainder_norm;
  std::vector<double> n_ratio;
  std::vector<double> deviation;
};

AsymptoticsReport analyze_asymptotics(const Trajectory& theta_traj,
                                      const StationaryProfile& profile, const EigenSystem& sys,
                                      const AsymptoticsOptions& opts = {});

}  // namespace pme

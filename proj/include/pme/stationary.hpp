#pragma once

#include <functional>

#include "pme/geometry.hpp"

namespace pme {

/// Discrete stationary profile Θ = S^m of -ΔΘ = (p/(1-p)) Θ^p, Θ = 0 on the boundary.
struct StationaryProfile {
  Grid grid;
  double p{0.5};
  Field theta;
  Field s_profile;     ///< S = Θ^{1/m} = Θ^p
  double slope_a{0};   ///< one-sided boundary derivative of Θ
  double norm_theta{0};///< sqrt(Σ V_i Θ_i^{p+1}), the control-volume form of <Θ,Θ>
  double residual_norm{0};
  int newton_iterations{0};

  double m() const { return 1.0 / p; }
};

struct NewtonOptions {
  int max_iterations = 100;
  int max_backtracks = 30;
  double positivity_floor = 1e-14;
};

/// Damped Newton for the discrete stationary problem, seeded with c·d(x).
/// Throws NonConvergence or CollapseToZero.
StationaryProfile solve_theta(const Grid& grid, double p, double tol,
                              const NewtonOptions& opts = {});

/// Boundary slope from Θ at d = h and d = 2h with the boundary zero (second order).
double boundary_slope(const Grid& grid, std::span<const double> theta);

/// U(·,t) = t^{-1/(m-1)} S.
Field friendly_giant(const StationaryProfile& profile, double t);

/// Independent first-integral solution on (0, 1).
struct ThetaOracle1D {
  double p{};
  double theta_max{};
  double energy{};     ///< E = Θ'^2/2 + k Θ^{1+p}/(1+p), constant along the profile
  double slope{};      ///< Θ'(0) = sqrt(2E)
  /// Θ(x) on [0, 1].
  std::function<double(double)> sample;
};

/// Θ_max by bisection on the half-length condition with adaptive quadrature
/// of the singular first-integral integrals. Throws QuadratureFailure.
ThetaOracle1D theta_oracle_1d(double p, double tol = 1e-12);

/// Shooting solution of Θ'' + ((n-1)/r)Θ' + kΘ^p = 0 on the ball of radius R
/// (n = 1 gives the half interval). Independent of the grid solver.
struct ThetaOracleRadial {
  int dim{};
  double radius{};
  double p{};
  double theta_center{};
  double slope{};  ///< |Θ'(R)|
  std::function<double(double)> sample;
};

ThetaOracleRadial theta_oracle_radial(int dim, double radius, double p, double tol = 1e-12);

}  // namespace pme

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pme/asymptotics.hpp"
#include "pme/evolution.hpp"
#include "pme/geometry.hpp"
#include "pme/stationary.hpp"

namespace pme {

/// Fit window in boundary distance: d ∈ [lo_cells · h, hi_fraction · size].
/// Nodes are taken from the left end on intervals and from r = R on balls.
struct BoundaryWindow {
  double lo_cells = 2.0;
  double hi_fraction = 0.1;
};

/**
 * v ≈ a d + b d^q + c d^{2q-1} (relative errors: w0 + b d^q + c d^{2q}).
 * On balls the curvature of the boundary adds the smooth terms d^2, d^3
 * (relative errors: d, d^2), fitted alongside and kept in `smooth`.
 */
struct ExpansionFit {
  double a{};
  double b{};
  double q{};
  double c{};                   ///< next-order coefficient, a nuisance parameter
  std::vector<double> smooth;   ///< coefficients of the extra integer powers (balls only)
  std::size_t first{}, last{};  ///< node indices spanned by the window
  double rms{};
  bool degenerate{false};       ///< no correction term present; q is NaN
};

/**
 * Variable-projection least squares: for each trial q the coefficients
 * (a, b, c) solve the linear problem; q minimises the residual by Brent's
 * method on (1, 5). Throws WindowTooSmall or FitDiverged.
 */
ExpansionFit fit_boundary_expansion(std::span<const double> v, const Grid& grid,
                                    const BoundaryWindow& window = {});

/// v minus the fitted integer-power terms, leaving the singular part b d^q + c d^{2q-1}.
Field singular_part(std::span<const double> v, const Grid& grid, const ExpansionFit& fit);

/// Log-log slope of |D³v| against d, D³ the centred 5-point third difference.
/// Default window starts at 4h. Throws NoiseDominated.
DecayFit third_derivative_blowup(std::span<const double> v, const Grid& grid,
                                 const BoundaryWindow& window = {4.0, 0.1});

/// max over window pairs of |D²v(x) - D²v(y)| / |x - y|^alpha.
double holder_proxy(std::span<const double> v, const Grid& grid, double alpha,
                    const BoundaryWindow& window = {});

/// Fit of u^m/Θ ≈ w0 + b d^q near the boundary; `a` holds w0.
ExpansionFit relative_error_regularity(std::span<const double> u, const StationaryProfile& profile,
                                       const BoundaryWindow& window = {});

/**
 * Slope of log sup_x |∂_t^ℓ (u^m)| against log t for t ∈ [t_lo, t_hi].
 * Accepts u-trajectories and θ-trajectories (u^m = t^{-m/(m-1)} θ, t = e^τ).
 * Stamp derivatives use 3-point non-uniform differences. Throws NoiseDominated.
 */
DecayFit time_derivative_decay(const Trajectory& traj, int ell, double t_lo, double t_hi);

}  // namespace pme

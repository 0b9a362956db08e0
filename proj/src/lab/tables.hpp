#pragma once

#include <functional>

#include "pme/asymptotics.hpp"
#include "pme/lab/report.hpp"
#include "pme/spectrum.hpp"
#include "pme/stationary.hpp"

namespace pme::lab::detail {

/// (x, theta, S, d)
Table profile_table(const StationaryProfile& profile);
/// One row per mode: j, mu_j, then ψ_j at every node.
Table spectrum_table(const EigenSystem& sys);
/// (tau, norm_h, beta_1..beta_K, remainder_norm)
Table asymptotics_table(const AsymptoticsReport& rep);

/// height (1 - ((x - center)/width)^2)^2 on |x - center| < width.
Field bump(const Grid& grid, double center, double width, double height);

/// Θ from the grid-independent oracle for the profile's domain (any interval
/// length, any ball).
std::function<double(double)> theta_oracle_for(const Grid& grid, double p);

double sup_error(const StationaryProfile& profile, const std::function<double(double)>& exact,
                 double min_distance = 0.0);

/// max|u - v| / max|v|.
double relative_sup_error(std::span<const double> u, std::span<const double> v);

/// (s + t)^{-1/(m-1)} S.
Field separable_solution(const StationaryProfile& profile, double s, double t);

}  // namespace pme::lab::detail

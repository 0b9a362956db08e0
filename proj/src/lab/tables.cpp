#include "tables.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace pme::lab::detail {

Table profile_table(const StationaryProfile& profile) {
  Table t{{"x", "theta", "S", "d"}, {}};
  const Grid& g = profile.grid;
  for (std::size_t i = 0; i < g.n(); ++i)
    t.rows.push_back({g.nodes[i], profile.theta[i], profile.s_profile[i], g.distance(i)});
  return t;
}

Table spectrum_table(const EigenSystem& sys) {
  Table t{{"j", "mu_j"}, {}};
  const std::size_t n = sys.weight.size();
  for (std::size_t i = 0; i < n; ++i) t.header.push_back(fmt::format("psi_j_{}", i + 1));
  for (std::size_t j = 0; j < sys.K(); ++j) {
    std::vector<double> row{double(j + 1), sys.mus[j]};
    row.insert(row.end(), sys.psis[j].begin(), sys.psis[j].end());
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table asymptotics_table(const AsymptoticsReport& rep) {
  const auto& proj = rep.projection;
  Table t{{"tau", "norm_h"}, {}};
  for (std::size_t j = 0; j < proj.beta.size(); ++j) t.header.push_back(fmt::format("beta_{}", j + 1));
  t.header.push_back("remainder_norm");
  for (std::size_t k = 0; k < proj.tau.size(); ++k) {
    std::vector<double> row{proj.tau[k], proj.norm_h[k]};
    for (const auto& b : proj.beta) row.push_back(b[k]);
    row.push_back(rep.remainder_norm[k]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

Field bump(const Grid& grid, double center, double width, double height) {
  Field u(grid.n(), 0.0);
  for (std::size_t i = 0; i < grid.n(); ++i) {
    const double s = (grid.nodes[i] - center) / width;
    if (std::abs(s) < 1.0) u[i] = height * (1.0 - s * s) * (1.0 - s * s);
  }
  return u;
}

std::function<double(double)> theta_oracle_for(const Grid& grid, double p) {
  if (grid.radial()) return theta_oracle_radial(grid.dim, grid.size, p).sample;
  const double L = grid.size;
  const double scale = std::pow(L, 2.0 / (1.0 - p));
  auto unit = theta_oracle_1d(p).sample;
  return [unit, L, scale](double x) { return scale * unit(x / L); };
}

double sup_error(const StationaryProfile& profile, const std::function<double(double)>& exact,
                 double min_distance) {
  double err = 0.0;
  const Grid& g = profile.grid;
  for (std::size_t i = 0; i < g.n(); ++i)
    if (g.distance(i) >= min_distance)
      err = std::max(err, std::abs(profile.theta[i] - exact(g.nodes[i])));
  return err;
}

double relative_sup_error(std::span<const double> u, std::span<const double> v) {
  double err = 0.0, vmax = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    err = std::max(err, std::abs(u[i] - v[i]));
    vmax = std::max(vmax, std::abs(v[i]));
  }
  return err / vmax;
}

Field separable_solution(const StationaryProfile& profile, double s, double t) {
  const double m = profile.m();
  const double factor = std::pow(s + t, -1.0 / (m - 1.0));
  Field u(profile.s_profile);
  for (double& v : u) v *= factor;
  return u;
}

}  // namespace pme::lab::detail

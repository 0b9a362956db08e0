#include "pme/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>
#include <fmt/format.h>

#include "differences.hpp"
#include "pme/error.hpp"

namespace pme {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Samples (d_k, v_k) inside the window, ordered by increasing d, with the
// grid index of each sample.
struct Samples {
  std::vector<double> d, v;
  std::vector<std::size_t> index;
};

Samples window_samples(std::span<const double> v, const Grid& grid, const BoundaryWindow& w,
                       std::size_t min_count) {
  if (v.size() != grid.n()) throw InvalidArgument("field does not match the grid");
  const double lo = w.lo_cells * grid.h * (1.0 - 1e-9);
  const double hi = w.hi_fraction * grid.size * (1.0 + 1e-9);
  Samples s;
  const std::size_t n = grid.n();
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = grid.radial() ? n - 1 - k : k;
    const double d = grid.distance(i);
    if (d < lo) continue;
    if (d > hi) break;
    s.d.push_back(d);
    s.v.push_back(v[i]);
    s.index.push_back(i);
  }
  if (s.d.size() < min_count)
    throw WindowTooSmall(fmt::format("fit window holds {} nodes (need {})", s.d.size(), min_count));
  return s;
}

// Variable projection for y ≈ c0 d^{e0} + [smooth] + c1 d^q + c2 d^{2q - e0} over
// q ∈ (1, 5). When `curved`, smooth is d^{e0+1}, d^{e0+2} and d^{q+1} joins the
// nuisance terms.
ExpansionFit projected_power_fit(const Samples& s, const std::vector<double>& y, double e0,
                                 bool curved) {
  const auto n = static_cast<Eigen::Index>(y.size());
  const Eigen::Index extra = curved ? 2 : 0;
  const Eigen::Index cols = 3 + extra + (curved ? 1 : 0);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index k = 0; k < n; ++k) rhs(k) = y[k];
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(cols);
  auto sse_at = [&](double q) {
    Eigen::MatrixXd A(n, cols);
    for (Eigen::Index k = 0; k < n; ++k) {
      A(k, 0) = std::pow(s.d[k], e0);
      for (Eigen::Index e = 1; e <= extra; ++e) A(k, e) = std::pow(s.d[k], e0 + double(e));
      A(k, extra + 1) = std::pow(s.d[k], q);
      A(k, extra + 2) = std::pow(s.d[k], 2.0 * q - e0);
      if (curved) A(k, extra + 3) = std::pow(s.d[k], q + 1.0);
    }
    coef = A.colPivHouseholderQr().solve(rhs);
    return (A * coef - rhs).squaredNorm();
  };

  ExpansionFit fit;
  fit.first = std::min(s.index.front(), s.index.back());
  fit.last = std::max(s.index.front(), s.index.back());

  // Leading term alone.
  double num = 0.0, den = 0.0, ymax = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double f = std::pow(s.d[k], e0);
    num += f * y[k];
    den += f * f;
    ymax = std::max(ymax, std::abs(y[k]));
  }
  const double lead = num / den;
  double spread = 0.0;
  for (Eigen::Index k = 0; k < n; ++k)
    spread = std::max(spread, std::abs(y[k] - lead * std::pow(s.d[k], e0)));
  if (spread <= 1e-10 * std::max(ymax, std::numeric_limits<double>::min())) {
    fit.a = lead;
    fit.q = std::numeric_limits<double>::quiet_NaN();
    fit.degenerate = true;
    return fit;
  }

  constexpr double qlo = 1.0 + 1e-6, qhi = 5.0;
  std::uintmax_t iters = 200;
  const auto best = boost::math::tools::brent_find_minima(sse_at, qlo, qhi, 50, iters);
  const double sse = sse_at(best.first);
  if (!std::isfinite(best.first) || !std::isfinite(sse) || best.first - qlo < 1e-3 ||
      qhi - best.first < 1e-3)
    throw FitDiverged(fmt::format("exponent fit ran to the bracket edge (q = {})", best.first));
  fit.a = coef(0);
  for (Eigen::Index e = 1; e <= extra; ++e) fit.smooth.push_back(coef(e));
  fit.b = coef(extra + 1);
  fit.c = coef(extra + 2);
  fit.q = best.first;
  fit.rms = std::sqrt(sse / double(n));
  return fit;
}

}  // namespace

ExpansionFit fit_boundary_expansion(std::span<const double> v, const Grid& grid,
                                    const BoundaryWindow& window) {
  const Samples s = window_samples(v, grid, window, 8);
  return projected_power_fit(s, s.v, 1.0, grid.radial());
}

Field singular_part(std::span<const double> v, const Grid& grid, const ExpansionFit& fit) {
  Field out(v.begin(), v.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = grid.distance(i);
    out[i] -= fit.a * d;
    for (std::size_t e = 0; e < fit.smooth.size(); ++e) out[i] -= fit.smooth[e] * std::pow(d, double(e + 2));
  }
  return out;
}

DecayFit third_derivative_blowup(std::span<const double> v, const Grid& grid,
                                 const BoundaryWindow& window) {
  const Samples s = window_samples(v, grid, window, 12);
  const double h3 = grid.h * grid.h * grid.h;
  double vmax = 0.0;
  for (double x : v) vmax = std::max(vmax, std::abs(x));
  const double floor = 100.0 * kEps * vmax / h3;

  std::vector<double> logd, mag;
  bool above = false;
  for (std::size_t k = 0; k < s.d.size(); ++k) {
    const std::size_t i = s.index[k];
    if (i < 2 || i + 2 >= v.size()) continue;
    const double d3 = (v[i + 2] - 2.0 * v[i + 1] + 2.0 * v[i - 1] - v[i - 2]) / (2.0 * h3);
    above = above || std::abs(d3) > floor;
    logd.push_back(std::log(s.d[k]));
    mag.push_back(std::abs(d3));
  }
  if (!above)
    throw NoiseDominated("third differences sit below the roundoff floor across the window");
  return fit_decay_rate(logd, mag, -std::numeric_limits<double>::infinity(),
                        std::numeric_limits<double>::infinity());
}

double holder_proxy(std::span<const double> v, const Grid& grid, double alpha,
                    const BoundaryWindow& window) {
  const Samples s = window_samples(v, grid, window, 4);
  const double h2 = grid.h * grid.h;
  std::vector<double> x, d2;
  for (std::size_t k = 0; k < s.d.size(); ++k) {
    const std::size_t i = s.index[k];
    if (i < 1 || i + 1 >= v.size()) continue;
    x.push_back(s.d[k]);
    d2.push_back((v[i + 1] - 2.0 * v[i] + v[i - 1]) / h2);
  }
  double best = 0.0;
  for (std::size_t a = 0; a < x.size(); ++a)
    for (std::size_t b = a + 1; b < x.size(); ++b)
      best = std::max(best, std::abs(d2[a] - d2[b]) / std::pow(std::abs(x[a] - x[b]), alpha));
  return best;
}

ExpansionFit relative_error_regularity(std::span<const double> u, const StationaryProfile& profile,
                                       const BoundaryWindow& window) {
  const double m = profile.m();
  const Samples s = window_samples(u, profile.grid, window, 8);
  std::vector<double> y(s.d.size());
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (!(s.v[k] > 0.0)) throw InvalidArgument("relative error needs u > 0 in the window");
    y[k] = std::pow(s.v[k], m) / profile.theta[s.index[k]];
  }
  ExpansionFit fit = projected_power_fit(s, y, 0.0, profile.grid.radial());
  return fit;
}

DecayFit time_derivative_decay(const Trajectory& traj, int ell, double t_lo, double t_hi) {
  if (ell != 1 && ell != 2) throw InvalidArgument("only first and second time derivatives are probed");
  if (traj.size() < 3) throw InvalidArgument("time derivatives need at least three stamps");
  const bool rescaled = traj.variable == Variable::theta;
  const double m = rescaled ? 1.0 / traj.exponent : traj.exponent;

  std::vector<double> t(traj.size());
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = rescaled ? std::exp(traj.times[k]) : traj.times[k];

  auto pressure = [&](std::size_t k) {
    Field v(traj.fields[k]);
    if (rescaled) {
      const double scale = std::pow(t[k], -m / (m - 1.0));
      for (double& x : v) x *= scale;
    } else {
      for (double& x : v) x = std::pow(x, m);
    }
    return v;
  };

  std::vector<double> logt, sup;
  bool noisy = false;
  for (std::size_t k = 1; k + 1 < t.size(); ++k) {
    if (t[k] < t_lo || t[k] > t_hi) continue;
    const Field a = pressure(k - 1), b = pressure(k), c = pressure(k + 1);
    const double h1 = t[k] - t[k - 1], h2 = t[k + 1] - t[k];
    double w[3];
    if (ell == 1)
      detail::first_derivative_weights(h1, h2, w);
    else
      detail::second_derivative_weights(h1, h2, w);
    double s = 0.0, vmax = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      s = std::max(s, std::abs(w[0] * a[i] + w[1] * b[i] + w[2] * c[i]));
      vmax = std::max(vmax, std::abs(b[i]));
    }
    const double floor = 100.0 * kEps * vmax * (std::abs(w[0]) + std::abs(w[1]) + std::abs(w[2]));
    noisy = noisy || s <= floor;
    logt.push_back(std::log(t[k]));
    sup.push_back(s);
  }
  if (noisy)
    throw NoiseDominated(fmt::format("order-{} time differences hit the roundoff floor", ell));
  return fit_decay_rate(logt, sup, -std::numeric_limits<double>::infinity(),
                        std::numeric_limits<double>::infinity());
}

}  // namespace pme

#include "pme/stationary.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>
#include <fmt/format.h>

#include "pme/error.hpp"
#include "pme/tridiagonal.hpp"

namespace pme {

namespace {

void check_exponent(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument(fmt::format("p must lie in (0,1), got {}", p));
}

Field residual(const Laplacian& lap, std::span<const double> theta, double k, double p) {
  Field r = lap.apply(theta);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= k * std::pow(theta[i], p);
  return r;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double norm2(std::span<const double> v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

}  // namespace

double boundary_slope(const Grid& grid, std::span<const double> theta) {
  const std::size_t n = grid.n();
  // Right end is the Dirichlet boundary on both grid kinds.
  return (4.0 * theta[n - 1] - theta[n - 2]) / (2.0 * grid.h);
}

StationaryProfile solve_theta(const Grid& grid, double p, double tol, const NewtonOptions& opts) {
  check_exponent(p);
  if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");

  const double k = p / (1.0 - p);
  const Laplacian lap = build_laplacian(grid);
  const std::size_t n = grid.n();
  const Field d = boundary_distance(grid);

  // Seed c·d with the mean of the linear part balancing the source.
  const Field kd = lap.apply_stiffness(d);
  double flux = 0.0, source = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    flux += kd[i];
    source += lap.volume[i] * k * std::pow(d[i], p);
  }
  const double c = std::pow(source / flux, 1.0 / (1.0 - p));
  Field theta(n);
  for (std::size_t i = 0; i < n; ++i) theta[i] = c * d[i];

  Field r = residual(lap, theta, k, p);
  double rmax = max_abs(r);
  int it = 0;
  for (; rmax > tol; ++it) {
    if (it >= opts.max_iterations)
      throw NonConvergence(fmt::format("stationary Newton did not converge in {} iterations "
                                       "(residual {:.3e})", it, rmax), rmax);
    Tridiagonal jac(n);
    for (std::size_t i = 0; i < n; ++i) {
      jac.diag[i] = lap.diag[i] / lap.volume[i] - k * p * std::pow(theta[i], p - 1.0);
      if (i + 1 < n) {
        jac.upper[i] = lap.off[i] / lap.volume[i];
        jac.lower[i] = lap.off[i] / lap.volume[i + 1];
      }
    }
    Field rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = -r[i];
    const Field step = solve_pivoted(jac, rhs);

    const double r2 = norm2(r);
    double lambda = 1.0;
    bool accepted = false;
    Field trial(n);
    for (int b = 0; b <= opts.max_backtracks; ++b, lambda *= 0.5) {
      for (std::size_t i = 0; i < n; ++i)
        trial[i] = std::max(theta[i] + lambda * step[i], opts.positivity_floor);
      Field rt = residual(lap, trial, k, p);
      if (norm2(rt) < r2) {
        theta.swap(trial);
        r.swap(rt);
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw NonConvergence(fmt::format("stationary Newton stagnated at residual {:.3e}", rmax),
                           rmax);
    if (max_abs(theta) <= 10.0 * opts.positivity_floor)
      throw CollapseToZero("Newton iterates collapsed onto the trivial solution");
    rmax = max_abs(r);
  }

  StationaryProfile prof;
  prof.grid = grid;
  prof.p = p;
  prof.theta = theta;
  prof.s_profile.resize(n);
  for (std::size_t i = 0; i < n; ++i) prof.s_profile[i] = std::pow(theta[i], p);
  prof.slope_a = boundary_slope(grid, theta);
  double energy = 0.0;
  for (std::size_t i = 0; i < n; ++i) energy += lap.volume[i] * std::pow(theta[i], p + 1.0);
  prof.norm_theta = std::sqrt(energy);
  prof.residual_norm = rmax;
  prof.newton_iterations = it;
  return prof;
}

Field friendly_giant(const StationaryProfile& profile, double t) {
  if (!(t > 0.0)) throw InvalidArgument(fmt::format("friendly giant needs t > 0, got {}", t));
  const double scale = std::pow(t, -profile.p / (1.0 - profile.p));
  Field u(profile.s_profile);
  for (double& v : u) v *= scale;
  return u;
}

// ---------------------------------------------------------------------------
// First-integral oracle on (0,1)

namespace {


// 2t / sqrt(1 - (1 - t^2)^{1+p}), the regularised integrand after Θ = Θmax (1 - t^2).
double regularised(double t, double p) {
  if (t < 1e-8) return 2.0 / std::sqrt(1.0 + p);
  const double gap = -std::expm1((1.0 + p) * std::log1p(-t * t));
  return 2.0 * t / std::sqrt(gap);
}

double integrate_checked(double lo, double hi, double p, double tol) {
  static thread_local boost::math::quadrature::tanh_sinh<double> rule;
  double err = 0.0;
  const double val = rule.integrate([p](double t) { return regularised(t, p); }, lo, hi, tol, &err);
  if (!std::isfinite(val) || err > 100.0 * tol * std::max(1.0, std::abs(val)))
    throw QuadratureFailure(
        fmt::format("first-integral quadrature did not converge (estimate {:.3e})", err));
  return val;
}

}  // namespace

ThetaOracle1D theta_oracle_1d(double p, double tol) {
  check_exponent(p);
  const double kf = p / ((1.0 - p) * (1.0 + p));

  // Half-length of the support for a given peak: ∫_0^{Θmax} dΘ / sqrt(2E - 2kf Θ^{1+p}).
  auto half_length = [&](double tmax) {
    const double scale = tmax / std::sqrt(2.0 * kf * std::pow(tmax, 1.0 + p));
    return scale * integrate_checked(0.0, 1.0, p, tol);
  };

  double lo = 0.01, hi = 10.0;
  while (half_length(lo) > 0.5) lo *= 0.1;
  while (half_length(hi) < 0.5) hi *= 10.0;
  while (hi - lo > tol * hi) {
    const double mid = 0.5 * (lo + hi);
    (half_length(mid) < 0.5 ? lo : hi) = mid;
  }

  ThetaOracle1D out;
  out.p = p;
  out.theta_max = 0.5 * (lo + hi);
  out.energy = kf * std::pow(out.theta_max, 1.0 + p);
  out.slope = std::sqrt(2.0 * out.energy);

  const double tmax = out.theta_max;
  const double scale = tmax / std::sqrt(2.0 * kf * std::pow(tmax, 1.0 + p));
  out.sample = [p, tmax, scale, tol](double x) {
    const double xs = std::min(x, 1.0 - x);
    if (xs <= 0.0) return 0.0;
    if (xs >= 0.5) return tmax;
    // X(t) = distance from the boundary at which Θ = Θmax (1 - t^2); decreasing in t.
    auto f = [&](double t) {
      const double X = scale * integrate_checked(t, 1.0, p, tol);
      return std::make_pair(X - xs, -scale * regularised(t, p));
    };
    std::uintmax_t iters = 200;
    const double t = boost::math::tools::newton_raphson_iterate(f, 0.5, 0.0, 1.0, 50, iters);
    return tmax * (1.0 - t * t);
  };
  return out;
}

// ---------------------------------------------------------------------------
// Shooting oracle on the ball

namespace {

using State = std::array<double, 2>;

struct LaneEmden {
  int dim;
  double k;
  double p;
  void operator()(const State& y, State& dy, double r) const {
    dy[0] = y[1];
    dy[1] = -(dim - 1) / r * y[1] - k * std::pow(std::max(y[0], 0.0), p);
  }
};

State taylor_start(const LaneEmden& sys, double r) {
  // φ = 1 - k r^2/(2n) + k^2 p r^4/(8n(n+2)) + ...
  const double n = sys.dim;
  const double a = sys.k / (2.0 * n);
  const double b = sys.k * sys.k * sys.p / (8.0 * n * (n + 2.0));
  return {1.0 - a * r * r + b * r * r * r * r, -2.0 * a * r + 4.0 * b * r * r * r};
}

}  // namespace

ThetaOracleRadial theta_oracle_radial(int dim, double radius, double p, double tol) {
  check_exponent(p);
  if (dim < 1 || !(radius > 0.0)) throw InvalidArgument("invalid ball for the radial oracle");
  namespace ode = boost::numeric::odeint;
  const LaneEmden sys{dim, p / (1.0 - p), p};
  constexpr double r0 = 1e-4;

  auto stepper = ode::make_dense_output(tol * 1e-2, tol, ode::runge_kutta_dopri5<State>());
  stepper.initialize(taylor_start(sys, r0), r0, 1e-3);
  while (stepper.current_state()[0] > 0.0) {
    stepper.do_step(sys);
    if (stepper.current_time() > 1e3) throw QuadratureFailure("shooting never reached a zero");
  }
  double lo = stepper.previous_time(), hi = stepper.current_time();
  State y;
  while (hi - lo > 1e-15 * hi) {
    const double mid = 0.5 * (lo + hi);
    stepper.calc_state(mid, y);
    (y[0] > 0.0 ? lo : hi) = mid;
  }
  const double zero = 0.5 * (lo + hi);
  stepper.calc_state(zero, y);

  ThetaOracleRadial out;
  out.dim = dim;
  out.radius = radius;
  out.p = p;
  const double stretch = zero / radius;
  const double amp = std::pow(stretch, -2.0 / (1.0 - p));
  out.theta_center = amp;
  out.slope = amp * stretch * std::abs(y[1]);
  out.sample = [sys, stretch, amp, zero, tol](double r) {
    const double s = std::min(stretch * std::abs(r), zero);
    if (s <= r0) return amp * taylor_start(sys, s)[0];
    State z = taylor_start(sys, r0);
    ode::integrate_adaptive(ode::make_controlled(tol * 1e-2, tol, ode::runge_kutta_dopri5<State>()),
                            sys, z, r0, s, 1e-3);
    return amp * std::max(z[0], 0.0);
  };
  return out;
}

}  // namespace pme

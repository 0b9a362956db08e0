#include "pme/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "differences.hpp"
#include "pme/error.hpp"

namespace pme {

Trajectory rescale_trajectory(const Trajectory& u_traj) {
  if (u_traj.variable != Variable::u) throw InvalidArgument("rescaling needs a u-trajectory");
  const double m = u_traj.exponent;
  Trajectory out;
  out.grid = u_traj.grid;
  out.variable = Variable::theta;
  out.exponent = 1.0 / m;
  for (std::size_t k = 0; k < u_traj.size(); ++k) {
    const double t = u_traj.times[k];
    if (!(t > 0.0)) throw InvalidArgument(fmt::format("cannot rescale the stamp t={}", t));
    const double scale = std::pow(t, m / (m - 1.0));
    Field theta(u_traj.fields[k].size());
    for (std::size_t i = 0; i < theta.size(); ++i)
      theta[i] = scale * std::pow(u_traj.fields[k][i], m);
    out.times.push_back(std::log(t));
    out.fields.push_back(std::move(theta));
  }
  for (auto rec : u_traj.step_log) {
    if (!(rec.stamp > 0.0)) continue;
    rec.stamp = std::log(rec.stamp);
    out.step_log.push_back(rec);
  }
  return out;
}

ModeProjection project_modes(const Trajectory& theta_traj, const StationaryProfile& profile,
                             const EigenSystem& sys, std::size_t K) {
  if (theta_traj.variable != Variable::theta) throw InvalidArgument("projection needs a θ-trajectory");
  if (K > sys.K()) throw InvalidArgument(fmt::format("only {} modes available", sys.K()));
  const std::size_t n = profile.theta.size();
  if (theta_traj.grid.n() != n || sys.weight.size() != n)
    throw InvalidArgument("trajectory, profile and eigen-system live on different grids");

  ModeProjection proj;
  proj.tau = theta_traj.times;
  proj.beta.assign(K, std::vector<double>(theta_traj.size()));
  Field h(n);
  for (std::size_t k = 0; k < theta_traj.size(); ++k) {
    for (std::size_t i = 0; i < n; ++i) h[i] = theta_traj.fields[k][i] - profile.theta[i];
    const double hh = sys.inner(h, h);
    Field rest = h;
    for (std::size_t j = 0; j < K; ++j) {
      const double b = sys.inner(h, sys.psis[j]);
      proj.beta[j][k] = b;
      for (std::size_t i = 0; i < n; ++i) rest[i] -= b * sys.psis[j][i];
    }
    proj.norm_h.push_back(std::sqrt(hh));
    proj.tail_norm.push_back(std::sqrt(sys.inner(rest, rest)));
  }
  return proj;
}

ModeConstants extract_cj(const ModeProjection& proj, const std::vector<double>& mus, double p,
                         double lo, double hi, double abs_floor) {
  ModeConstants out;
  out.lo = lo;
  out.hi = hi;
  while (out.J < std::min(mus.size(), proj.beta.size()) && mus[out.J] / p < 2.0) ++out.J;

  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < proj.tau.size(); ++k)
    if (proj.tau[k] >= lo && proj.tau[k] <= hi) idx.push_back(k);
  if (idx.size() < 4)
    throw InvalidArgument(fmt::format("extraction window [{}, {}] holds {} samples", lo, hi, idx.size()));

  const std::size_t half = idx.size() / 2;
  for (std::size_t j = 0; j < out.J; ++j) {
    double all = 0.0, first = 0.0, second = 0.0;
    for (std::size_t s = 0; s < idx.size(); ++s) {
      const std::size_t k = idx[s];
      const double v = std::exp(mus[j] * proj.tau[k] / p) * proj.beta[j][k];
      all += v;
      (s < half ? first : second) += v;
    }
    const double c = all / double(idx.size());
    const double drift = std::abs(first / double(half) - second / double(idx.size() - half));
    if (drift > abs_floor && drift > 0.1 * std::abs(c))
      throw NotConverged(fmt::format("c_{} = {:.4e} drifts by {:.3e} over τ ∈ [{}, {}]", j + 1, c,
                                     drift, lo, hi));
    out.c.push_back(c);
    out.drift.push_back(drift);
  }
  return out;
}

ShiftConstants compute_A1_tau_star(double c1, const StationaryProfile& profile) {
  ShiftConstants out;
  const double m = profile.m();
  out.sign_warning = c1 > 0.0;
  out.A1 = -c1 / profile.norm_theta;
  if (out.A1 == 0.0) out.A1 = 0.0;  // no negative zero in reports
  out.tau_star = (m - 1.0) * out.A1 / m;
  return out;
}

DecayFit fit_decay_rate(const std::vector<double>& x, const std::vector<double>& value, double lo,
                        double hi, bool log_correction) {
  if (x.size() != value.size()) throw InvalidArgument("series lengths differ");
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k] < lo || x[k] > hi) continue;
    if (!(value[k] > 0.0))
      throw InvalidArgument(fmt::format("non-positive value {} at x={}", value[k], x[k]));
    xs.push_back(x[k]);
    ys.push_back(std::log(value[k]) - (log_correction ? std::log(x[k]) : 0.0));
  }
  const std::size_t n = xs.size();
  if (n < 12) throw InvalidArgument(fmt::format("fit window holds {} samples (need 12)", n));
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= double(n);
  my /= double(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxy += (xs[k] - mx) * (ys[k] - my);
  }
  if (!(sxx > 0.0)) throw DegenerateFit("all samples share one abscissa");
  DecayFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = ys[k] - fit.intercept - fit.slope * xs[k];
    sse += r * r;
  }
  fit.stderr_slope = std::sqrt(sse / double(n - 2) / sxx);
  fit.samples = n;
  return fit;
}

double nonlinear_excess(double x, double p) {
  if (std::abs(x) < 1e-4) {
    const double c2 = p * (p - 1.0) / 2.0;
    const double c3 = c2 * (p - 2.0) / 3.0;
    const double c4 = c3 * (p - 3.0) / 4.0;
    return x * x * (c2 + x * (c3 + x * c4));
  }
  return std::expm1(p * std::log1p(x)) - p * x;
}

Field residual_N(std::span<const double> theta, std::span<const double> theta_tau,
                 const StationaryProfile& profile) {
  const double p = profile.p;
  const double k = p / (1.0 - p);
  const std::size_t n = profile.theta.size();
  if (theta.size() != n || theta_tau.size() != n) throw InvalidArgument("field length mismatch");
  Field out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double T = profile.theta[i];
    const double x = (theta[i] - T) / T;
    const double first = k * std::pow(T, p) * nonlinear_excess(x, p);
    const double second =
        p * std::pow(T, p - 1.0) * -std::expm1((p - 1.0) * std::log1p(x)) * theta_tau[i];
    out[i] = first + second;
  }
  return out;
}

std::vector<double> residual_N_series(const Trajectory& theta_traj,
                                      const StationaryProfile& profile) {
  if (theta_traj.size() < 3) throw InvalidArgument("N(h) needs at least three stamps");
  std::vector<double> out;
  for (std::size_t k = 0; k < theta_traj.size(); ++k) {
    const Field dt = detail::stamp_derivative(theta_traj.times, theta_traj.fields, k);
    const Field nf = residual_N(theta_traj.fields[k], dt, profile);
    double sup = 0.0;
    for (std::size_t i = 0; i < nf.size(); ++i)
      sup = std::max(sup, std::abs(nf[i]) / profile.s_profile[i]);
    out.push_back(sup);
  }
  return out;
}

double relative_deviation(std::span<const double> theta, const StationaryProfile& profile) {
  double sup = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i)
    sup = std::max(sup, std::abs(std::expm1(profile.p * std::log(theta[i] / profile.theta[i]))));
  return sup;
}

AsymptoticsReport analyze_asymptotics(const Trajectory& theta_traj,
                                      const StationaryProfile& profile, const EigenSystem& sys,
                                      const AsymptoticsOptions& opts) {
  if (opts.fit_hi - opts.fit_lo < 3.0)
    throw InvalidArgument("fit window must span at least 3 units of τ");
  AsymptoticsReport rep;
  rep.fit_lo = opts.fit_lo;
  rep.fit_hi = opts.fit_hi;
  const std::size_t K = std::min(opts.K, sys.K());
  rep.projection = project_modes(theta_traj, profile, sys, K);
  const auto& tau = rep.projection.tau;

  rep.modes = extract_cj(rep.projection, sys.mus, profile.p, opts.tail_lo, opts.tail_hi);
  const ShiftConstants sc = compute_A1_tau_star(rep.modes.c.empty() ? 0.0 : rep.modes.c[0], profile);
  rep.A1 = sc.A1;
  rep.tau_star = sc.tau_star;
  rep.sign_warning = sc.sign_warning;

  if (sys.K() >= 2) {
    const SpectralGap gap = spectral_gap_gamma(sys);
    rep.gamma = gap.gamma;
    rep.log_correction = gap.log_correction;
  }

  const std::size_t n = profile.theta.size();
  Field r(n);
  for (std::size_t k = 0; k < theta_traj.size(); ++k) {
    const double e = rep.A1 * std::exp(-tau[k]);
    for (std::size_t i = 0; i < n; ++i)
      r[i] = theta_traj.fields[k][i] - profile.theta[i] + e * profile.theta[i];
    rep.remainder_norm.push_back(std::sqrt(sys.inner(r, r)));
    rep.deviation.push_back(relative_deviation(theta_traj.fields[k], profile));
  }
  rep.n_ratio = residual_N_series(theta_traj, profile);

  rep.fit_h = fit_decay_rate(tau, rep.projection.norm_h, opts.fit_lo, opts.fit_hi);
  rep.fit_remainder =
      fit_decay_rate(tau, rep.remainder_norm, opts.fit_lo, opts.fit_hi, rep.log_correction);
  rep.fit_N = fit_decay_rate(tau, rep.n_ratio, opts.fit_lo, opts.fit_hi);
  rep.fit_deviation = fit_decay_rate(tau, rep.deviation, opts.fit_lo, opts.fit_hi);
  rep.residual_bound_ok = std::abs(rep.fit_N.slope + 2.0) <= 0.3;
  return rep;
}

}  // namespace pme

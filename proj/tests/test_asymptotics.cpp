#include <cmath>
#include <vector>

#include <doctest.h>

#include "pme/asymptotics.hpp"
#include "pme/error.hpp"
#include "support.hpp"

using namespace pme;

namespace {

// Exact separable solution in rescaled form: θ = (1 + s e^{-τ})^{-m/(m-1)} Θ.
Trajectory separable_theta(const StationaryProfile& prof, double s, double tau_end, double dtau) {
  Trajectory tr;
  tr.grid = prof.grid;
  tr.variable = Variable::theta;
  tr.exponent = prof.p;
  const double m = prof.m();
  for (double tau = 0.0; tau <= tau_end + 1e-12; tau += dtau) {
    Field th(prof.theta);
    const double g = std::pow(1.0 + s * std::exp(-tau), -m / (m - 1.0));
    for (double& v : th) v *= g;
    tr.times.push_back(tau);
    tr.fields.push_back(std::move(th));
  }
  return tr;
}

}  // namespace

TEST_SUITE("asymptotics") {

TEST_CASE("decay fits recover synthetic rates") {
  std::vector<double> x, v, w;
  for (int k = 0; k <= 100; ++k) {
    x.push_back(0.1 * k);
    v.push_back(3.0 * std::exp(-1.7 * x.back()));
    w.push_back((x.back() + 0.5) * std::exp(-2.0 * x.back()));
  }
  const DecayFit f = fit_decay_rate(x, v, 2.0, 8.0);
  CHECK(f.slope == doctest::Approx(-1.7).epsilon(1e-12));
  CHECK(std::exp(f.intercept) == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(f.samples == 61);
  CHECK(f.stderr_slope < 1e-10);
  const DecayFit g = fit_decay_rate(x, w, 4.0, 10.0, true);
  CHECK(g.slope == doctest::Approx(-2.0).epsilon(0.02));

  CHECK_THROWS_AS(fit_decay_rate(x, v, 2.0, 2.5), InvalidArgument);
  std::vector<double> bad(v);
  bad[30] = 0.0;
  CHECK_THROWS_AS(fit_decay_rate(x, bad, 2.0, 8.0), InvalidArgument);
  const std::vector<double> same(20, 1.0), ones(20, 2.0);
  CHECK_THROWS_AS(fit_decay_rate(same, ones, 0.0, 2.0), DegenerateFit);
}

TEST_CASE("nonlinear excess is smooth across the series switch") {
  for (double p : {0.3, 0.5, 0.7}) {
    for (double x0 : {1e-4, -1e-4}) {
      const double below = nonlinear_excess(x0 * (1 - 1e-9), p);
      const double above = nonlinear_excess(x0 * (1 + 1e-9), p);
      CHECK(below == doctest::Approx(above).epsilon(1e-7));
    }
    for (double x : {1e-8, 1e-3, 0.2, -0.5, 3.0}) {
      const long double lx = x;
      const long double ref = std::pow(1.0L + lx, (long double)p) - 1.0L - p * lx;
      CHECK(nonlinear_excess(x, p) == doctest::Approx(double(ref)).epsilon(1e-6));
    }
    CHECK(nonlinear_excess(0.0, p) == 0.0);
  }
}

TEST_CASE("mode constants") {
  ModeProjection proj;
  const std::vector<double> mus{0.5, 1.5};
  const double p = 0.5;
  proj.beta.assign(2, {});
  for (int k = 0; k <= 400; ++k) {
    const double tau = 0.05 * k;
    proj.tau.push_back(tau);
    proj.beta[0].push_back(-0.7 * std::exp(-tau));
    proj.beta[1].push_back(0.2 * std::exp(-3 * tau));
  }
  const ModeConstants mc = extract_cj(proj, mus, p, 12.0, 16.0);
  REQUIRE(mc.J == 1);
  CHECK(mc.c[0] == doctest::Approx(-0.7).epsilon(1e-12));
  CHECK(mc.drift[0] < 1e-12);

  for (std::size_t k = 0; k < proj.tau.size(); ++k) proj.beta[0][k] *= 1.0 + proj.tau[k];
  CHECK_THROWS_AS(extract_cj(proj, mus, p, 12.0, 16.0), NotConverged);
  CHECK_THROWS_AS(extract_cj(proj, mus, p, 30.0, 40.0), InvalidArgument);
}

TEST_CASE("shift constants") {
  StationaryProfile prof;
  prof.p = 0.5;
  prof.norm_theta = 2.0;
  const ShiftConstants sc = compute_A1_tau_star(-0.4, prof);
  CHECK(sc.A1 == doctest::Approx(0.2));
  CHECK(sc.tau_star == doctest::Approx(0.1));
  CHECK_FALSE(sc.sign_warning);
  CHECK(compute_A1_tau_star(0.1, prof).sign_warning);
}

TEST_CASE("rescaling a separable u-trajectory") {
  const StationaryProfile prof = solve_theta(build_grid(GridKind::interval, 1, 1.0, 63), 0.5, 1e-10);
  Trajectory u;
  u.grid = prof.grid;
  u.variable = Variable::u;
  u.exponent = 2.0;
  for (double t : {0.5, 1.0, 2.0}) {
    u.times.push_back(t);
    u.fields.push_back(friendly_giant(prof, 1.0 + t));
  }
  const Trajectory th = rescale_trajectory(u);
  CHECK(th.variable == Variable::theta);
  CHECK(th.exponent == 0.5);
  for (std::size_t k = 0; k < th.size(); ++k) {
    const double t = u.times[k];
    CHECK(th.times[k] == doctest::Approx(std::log(t)));
    const double g = std::pow(t / (1.0 + t), 2.0);
    for (std::size_t i = 0; i < prof.grid.n(); ++i)
      CHECK(th.fields[k][i] == doctest::Approx(g * prof.theta[i]).epsilon(1e-12));
  }
  CHECK_THROWS_AS(rescale_trajectory(th), InvalidArgument);
  u.times[0] = 0.0;
  CHECK_THROWS_AS(rescale_trajectory(u), InvalidArgument);
}

TEST_CASE("separable data: rates, shift and projections") {
  const double s = 0.1;
  const StationaryProfile prof = solve_theta(build_grid(GridKind::interval, 1, 1.0, 127), 0.5, 1e-10);
  const EigenSystem sys = solve_eigenpairs(assemble_linearized(prof), 4);
  const Trajectory tr = separable_theta(prof, s, 16.0, 0.02);

  const AsymptoticsReport rep = analyze_asymptotics(tr, prof, sys);
  // h ≈ -(m/(m-1)) s e^{-τ} Θ, so A_1 = 2s and τ* = s for m = 2.
  CHECK(rep.A1 == doctest::Approx(2.0 * s).epsilon(1e-6));
  CHECK(rep.tau_star == doctest::Approx(s).epsilon(1e-6));
  CHECK_FALSE(rep.sign_warning);
  CHECK(rep.fit_h.slope == doctest::Approx(-1.0).epsilon(0.01));
  CHECK(rep.fit_remainder.slope == doctest::Approx(-2.0).epsilon(0.01));
  CHECK(rep.fit_N.slope == doctest::Approx(-2.0).epsilon(0.02));
  CHECK(rep.residual_bound_ok);
  CHECK(rep.fit_deviation.slope == doctest::Approx(-1.0).epsilon(0.01));
  CHECK(rep.gamma == doctest::Approx(1.0).epsilon(1e-3));
  CHECK_FALSE(rep.log_correction);

  // Separable data never excites the higher modes.
  const double floor = 1e-13 * prof.norm_theta;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    CHECK(std::abs(rep.projection.beta[1][k]) < 1e-9 * rep.projection.norm_h[k] + floor);
    CHECK(rep.projection.tail_norm[k] < 1e-9 * rep.projection.norm_h[k] + floor);
  }

  CHECK_THROWS_AS(project_modes(tr, prof, sys, 5), InvalidArgument);
  AsymptoticsOptions narrow;
  narrow.fit_hi = narrow.fit_lo + 1.0;
  CHECK_THROWS_AS(analyze_asymptotics(tr, prof, sys, narrow), InvalidArgument);
}

TEST_CASE("residual vanishes at the profile") {
  const StationaryProfile prof = solve_theta(build_grid(GridKind::interval, 1, 1.0, 63), 0.5, 1e-10);
  const Field zero(prof.grid.n(), 0.0);
  for (double v : residual_N(prof.theta, zero, prof)) CHECK(v == doctest::Approx(0.0));
  CHECK(relative_deviation(prof.theta, prof) == 0.0);
}

}  // TEST_SUITE

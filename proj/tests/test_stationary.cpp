#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "pme/error.hpp"
#include "pme/stationary.hpp"
#include "support.hpp"

using namespace pme;

namespace {

struct Frozen {
  double p, theta_max, energy, slope;
};

// 30-digit evaluation of the closed-form half-length condition.
constexpr Frozen kFrozen[] = {
    {0.3, 0.013894399923611876, 0.0012699060609056066, 0.050396548709323471},
    {0.5, 0.012556345121604762, 0.00093800166041371928, 0.043312853990789369},
    {0.7, 0.0099600458579696874, 0.00054271539162976889, 0.032945876574459781},
};

double grid_error(const StationaryProfile& s, const ThetaOracle1D& o) {
  double e = 0.0;
  for (std::size_t i = 0; i < s.grid.n(); ++i) e = std::max(e, std::abs(s.theta[i] - o.sample(s.grid.nodes[i])));
  return e;
}

}  // namespace

TEST_SUITE("stationary") {

TEST_CASE("oracle matches frozen values") {
  for (const Frozen& f : kFrozen) {
    CAPTURE(f.p);
    const ThetaOracle1D o = theta_oracle_1d(f.p);
    CHECK(o.theta_max == doctest::Approx(f.theta_max).epsilon(1e-11));
    CHECK(o.energy == doctest::Approx(f.energy).epsilon(1e-11));
    CHECK(o.slope == doctest::Approx(f.slope).epsilon(1e-11));
    CHECK(o.sample(0.5) == doctest::Approx(f.theta_max).epsilon(1e-10));
    CHECK(o.sample(0.0) == doctest::Approx(0.0));
    CHECK(o.sample(0.3) == doctest::Approx(o.sample(0.7)).epsilon(1e-10));
  }
  CHECK(theta_oracle_1d(0.3).theta_max > theta_oracle_1d(0.5).theta_max);
  CHECK(theta_oracle_1d(0.5).theta_max > theta_oracle_1d(0.7).theta_max);
  CHECK_THROWS_AS(theta_oracle_1d(1.0), InvalidArgument);
  CHECK_THROWS_AS(theta_oracle_1d(0.0), InvalidArgument);
}

TEST_CASE("shooting oracle agrees with the first integral") {
  for (const Frozen& f : kFrozen) {
    CAPTURE(f.p);
    const ThetaOracleRadial r = theta_oracle_radial(1, 0.5, f.p);
    CHECK(r.theta_center == doctest::Approx(f.theta_max).epsilon(1e-8));
    CHECK(r.slope == doctest::Approx(f.slope).epsilon(1e-8));
  }
}

TEST_CASE("grid solution is positive, symmetric and second-order accurate") {
  for (const Frozen& f : kFrozen) {
    CAPTURE(f.p);
    const ThetaOracle1D o = theta_oracle_1d(f.p);
    double prev = 0.0;
    for (std::size_t N : {99u, 199u, 399u}) {
      const StationaryProfile s = solve_theta(build_grid(GridKind::interval, 1, 1.0, N), f.p, 1e-10);
      CHECK(s.residual_norm <= 1e-10);
      for (std::size_t i = 0; i < N; ++i) {
        CHECK(s.theta[i] > 0.0);
        CHECK(s.theta[i] == doctest::Approx(s.theta[N - 1 - i]).epsilon(1e-9));
        CHECK(s.s_profile[i] == doctest::Approx(std::pow(s.theta[i], f.p)));
      }
      const double e = grid_error(s, o);
      if (prev > 0.0) CHECK(std::log2(prev / e) > 1.8);
      prev = e;
    }
    const StationaryProfile s = solve_theta(build_grid(GridKind::interval, 1, 1.0, 399), f.p, 1e-10);
    CHECK(s.slope_a == doctest::Approx(f.slope).epsilon(1e-3));
  }
}

TEST_CASE("length scaling") {
  const double p = 0.5, L = 2.0;
  const StationaryProfile one = solve_theta(build_grid(GridKind::interval, 1, 1.0, 199), p, 1e-10);
  const StationaryProfile two = solve_theta(build_grid(GridKind::interval, 1, L, 199), p, 1e-10);
  const double scale = std::pow(L, 2.0 / (1.0 - p));
  for (std::size_t i = 0; i < one.grid.n(); ++i)
    CHECK(two.theta[i] == doctest::Approx(scale * one.theta[i]).epsilon(1e-8));
}

TEST_CASE("radial profile matches shooting") {
  const double p = 0.5;
  const ThetaOracleRadial r = theta_oracle_radial(3, 1.0, p);
  const StationaryProfile s = solve_theta(build_grid(GridKind::radial, 3, 1.0, 400), p, 1e-10);
  double e = 0.0;
  for (std::size_t i = 0; i < s.grid.n(); ++i) e = std::max(e, std::abs(s.theta[i] - r.sample(s.grid.nodes[i])));
  CHECK(e < 1e-4 * r.theta_center);
  CHECK(std::is_sorted(s.theta.rbegin(), s.theta.rend()));
}

TEST_CASE("friendly giant") {
  const StationaryProfile s = solve_theta(build_grid(GridKind::interval, 1, 1.0, 63), 0.5, 1e-10);
  const Field u1 = friendly_giant(s, 1.0);
  const Field u4 = friendly_giant(s, 4.0);
  for (std::size_t i = 0; i < u1.size(); ++i) {
    CHECK(u1[i] == doctest::Approx(s.s_profile[i]));
    CHECK(u4[i] == doctest::Approx(0.25 * s.s_profile[i]));  // t^{-1/(m-1)}, m = 2
  }
  CHECK_THROWS_AS(friendly_giant(s, 0.0), InvalidArgument);
}

TEST_CASE("invalid exponent") {
  const Grid g = build_grid(GridKind::interval, 1, 1.0, 31);
  CHECK_THROWS_AS(solve_theta(g, 1.2, 1e-10), InvalidArgument);
  CHECK_THROWS_AS(solve_theta(g, -0.1, 1e-10), InvalidArgument);
}

}  // TEST_SUITE

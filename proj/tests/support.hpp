#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "pme/geometry.hpp"

namespace pme::test {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * double(rng() >> 11) * 0x1.0p-53;
}

/// Nonnegative data: a sum of compactly supported quartic bumps.
inline Field random_bumps(const Grid& g, std::mt19937_64& rng, int count) {
  Field u(g.n(), 0.0);
  for (int b = 0; b < count; ++b) {
    const double c = uniform(rng, 0.15, 0.85) * g.size, w = uniform(rng, 0.05, 0.15) * g.size;
    const double a = uniform(rng, 0.2, 1.0);
    for (std::size_t i = 0; i < g.n(); ++i) {
      const double s = (g.nodes[i] - c) / w;
      if (std::abs(s) < 1.0) u[i] += a * (1.0 - s * s) * (1.0 - s * s);
    }
  }
  return u;
}

inline double sup_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace pme::test

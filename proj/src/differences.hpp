#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pme::detail {

/// Weights (w_-, w_0, w_+) for f' at the middle of three points with
/// spacings h1 (left) and h2 (right).
inline void first_derivative_weights(double h1, double h2, double w[3]) {
  w[0] = -h2 / (h1 * (h1 + h2));
  w[1] = (h2 - h1) / (h1 * h2);
  w[2] = h1 / (h2 * (h1 + h2));
}

inline void second_derivative_weights(double h1, double h2, double w[3]) {
  w[0] = 2.0 / (h1 * (h1 + h2));
  w[1] = -2.0 / (h1 * h2);
  w[2] = 2.0 / (h2 * (h1 + h2));
}

/// d/dt of the sampled family f(t_k) at stamp k; second order, one-sided at the ends.
inline std::vector<double> stamp_derivative(std::span<const double> t,
                                            const std::vector<std::vector<double>>& f,
                                            std::size_t k) {
  const std::size_t n = f[k].size();
  std::vector<double> out(n);
  double w[3];
  std::size_t c = k;
  if (k == 0) {
    const double h1 = t[1] - t[0], h2 = t[2] - t[1];
    w[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2));
    w[1] = (h1 + h2) / (h1 * h2);
    w[2] = -h1 / (h2 * (h1 + h2));
    c = 1;
  } else if (k + 1 == t.size()) {
    const double h1 = t[k - 1] - t[k - 2], h2 = t[k] - t[k - 1];
    w[0] = h2 / (h1 * (h1 + h2));
    w[1] = -(h1 + h2) / (h1 * h2);
    w[2] = (h1 + 2.0 * h2) / (h2 * (h1 + h2));
    c = k - 1;
  } else {
    first_derivative_weights(t[k] - t[k - 1], t[k + 1] - t[k], w);
  }
  for (std::size_t i = 0; i < n; ++i)
    out[i] = w[0] * f[c - 1][i] + w[1] * f[c][i] + w[2] * f[c + 1][i];
  return out;
}

}  // namespace pme::detail

#include "pme/geometry.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "pme/error.hpp"

namespace pme {

double Grid::distance(std::size_t i) const {
  const double x = nodes[i];
  return radial() ? size - x : std::min(x, size - x);
}

std::vector<double> uniform_nodes(double size, std::size_t n) {
  std::vector<double> x(n);
  const double h = size / static_cast<double>(n + 1);
  for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(i + 1) * h;
  return x;
}

Grid build_grid(GridKind kind, int dim, double size, std::size_t n) {
  if (n < 8) throw InvalidArgument(fmt::format("grid needs at least 8 interior nodes, got {}", n));
  if (!(size > 0.0) || !std::isfinite(size))
    throw InvalidArgument(fmt::format("domain size must be positive, got {}", size));
  if (dim < 1) throw InvalidArgument(fmt::format("dimension must be >= 1, got {}", dim));
  if (kind == GridKind::interval && dim != 1)
    throw InvalidArgument("interval grids are one-dimensional");

  Grid g;
  g.kind = kind;
  g.dim = dim;
  g.size = size;
  g.h = size / static_cast<double>(n + 1);
  g.nodes = uniform_nodes(size, n);
  return g;
}

Field boundary_distance(const Grid& grid) {
  Field d(grid.n());
  for (std::size_t i = 0; i < grid.n(); ++i) d[i] = grid.distance(i);
  return d;
}

Field Laplacian::apply_stiffness(std::span<const double> u) const {
  const std::size_t n = diag.size();
  Field out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = diag[i] * u[i];
    if (i > 0) s += off[i - 1] * u[i - 1];
    if (i + 1 < n) s += off[i] * u[i + 1];
    out[i] = s;
  }
  return out;
}

Field Laplacian::apply(std::span<const double> u) const {
  Field out = apply_stiffness(u);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= volume[i];
  return out;
}

namespace {

double shell_volume(double r0, double r1, int dim) {
  return (std::pow(r1, dim) - std::pow(r0, dim)) / dim;
}

}  // namespace

Laplacian build_laplacian(const Grid& grid) {
  const std::size_t n = grid.n();
  const double h = grid.h;
  Laplacian lap;
  lap.diag.assign(n, 0.0);
  lap.off.assign(n - 1, 0.0);
  lap.volume.assign(n, h);

  if (!grid.radial()) {
    for (std::size_t i = 0; i < n; ++i) lap.diag[i] = 2.0 / h;
    for (std::size_t i = 0; i + 1 < n; ++i) lap.off[i] = -1.0 / h;
    return lap;
  }

  const int k = grid.dim - 1;
  // Face i+1/2 sits between node i and node i+1; face n-1/2 meets the Dirichlet end.
  std::vector<double> area(n);
  for (std::size_t i = 0; i < n; ++i) area[i] = std::pow(grid.nodes[i] + 0.5 * h, k);
  for (std::size_t i = 0; i < n; ++i) {
    const double left = i == 0 ? 0.0 : area[i - 1];
    lap.diag[i] = (left + area[i]) / h;
    if (i + 1 < n) lap.off[i] = -area[i] / h;
    const double r0 = i == 0 ? 0.0 : grid.nodes[i] - 0.5 * h;
    lap.volume[i] = shell_volume(r0, grid.nodes[i] + 0.5 * h, grid.dim);
  }
  return lap;
}

std::vector<double> quadrature_weights(const Grid& grid, double beta) {
  if (!(beta > -1.0)) throw InvalidArgument(fmt::format("end-cell exponent {} is not integrable", beta));
  const std::size_t n = grid.n();
  const double h = grid.h;
  std::vector<double> q(n, 0.0);

  // Product-integration weights for the node at d = h (e1) and d = 2h (e2).
  const double b1 = beta + 1.0;
  const double b2 = beta + 2.0;
  const double a0 = std::pow(h, b1) / b1;
  const double m0 = (std::pow(2.0 * h, b1) - std::pow(h, b1)) / b1;
  const double m1 = (std::pow(2.0 * h, b2) - std::pow(h, b2)) / b2;
  const double e1 = (a0 + (2.0 * h * m0 - m1) / h) / std::pow(h, beta);
  const double e2 = ((m1 - h * m0) / h) / std::pow(2.0 * h, beta);

  if (!grid.radial()) {
    for (std::size_t i = 1; i + 1 < n; ++i) q[i] = h;
    q[1] = q[n - 2] = 0.5 * h;
    q[0] += e1;
    q[1] += e2;
    q[n - 1] += e1;
    q[n - 2] += e2;
    return q;
  }

  const int k = grid.dim - 1;
  auto rk = [&](std::size_t i) { return std::pow(grid.nodes[i], k); };
  // [0, h]: the integrand is even in r, so a constant model is second order.
  q[0] = std::pow(h, grid.dim) / grid.dim;
  q[0] += 0.5 * h * rk(0);
  for (std::size_t i = 1; i + 2 < n; ++i) q[i] = h * rk(i);
  q[n - 2] = 0.5 * h * rk(n - 2);
  q[n - 1] += e1 * rk(n - 1);
  q[n - 2] += e2 * rk(n - 2);
  return q;
}

bool vanishes_linearly(const Grid& grid, std::span<const double> w) {
  const std::size_t n = grid.n();
  auto linear_end = [&](double near, double next) {
    if (!(near > 0.0) || !(next > 0.0)) return false;
    return std::abs(near / next - 0.5) < 0.15;
  };
  bool ok = linear_end(w[n - 1], w[n - 2]);
  if (!grid.radial()) ok = ok && linear_end(w[0], w[1]);
  return ok;
}

WeightedInnerProduct::WeightedInnerProduct(const Grid& grid, std::span<const double> w,
                                           double exponent) {
  if (w.size() != grid.n()) throw InvalidArgument("weight field does not match the grid");
  double beta = 0.0;
  if (exponent != 0.0 && vanishes_linearly(grid, w)) {
    if (exponent <= -1.0)
      throw InvalidArgument(
          fmt::format("weight^{} diverges against a linearly vanishing weight", exponent));
    beta = exponent;
  }
  weights_ = quadrature_weights(grid, beta);
  if (exponent != 0.0) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!(w[i] > 0.0)) throw InvalidArgument("weight must be positive at interior nodes");
      weights_[i] *= std::pow(w[i], exponent);
    }
  }
}

double WeightedInnerProduct::operator()(std::span<const double> f,
                                        std::span<const double> g) const {
  if (f.size() != weights_.size() || g.size() != weights_.size())
    throw InvalidArgument("field length does not match the grid");
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += weights_[i] * (f[i] * g[i]);
  return s;
}

double WeightedInnerProduct::norm(std::span<const double> f) const {
  return std::sqrt((*this)(f, f));
}

double weighted_inner_product(const Grid& grid, std::span<const double> f,
                              std::span<const double> g, std::span<const double> w,
                              double exponent) {
  return WeightedInnerProduct(grid, w, exponent)(f, g);
}

}  // namespace pme

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pme {

/// Nodal samples on a Grid. Index i corresponds to grid.nodes[i]; the
/// Dirichlet boundary value 0 is implicit and never stored.
using Field = std::vector<double>;

enum class GridKind { interval, radial };

/**
 * Uniform 1-D grid on the open interval (0, L) or on the radius (0, R) of an
 * n-dimensional ball.
 *
 * Nodes are x_i = i*h, i = 1..N, with h = size/(N+1). Neither endpoint is a
 * node. On radial grids the centre r = 0 carries a zero-flux (symmetry)
 * condition and r = R the Dirichlet condition.
 */
struct Grid {
  GridKind kind{GridKind::interval};
  int dim{1};
  double size{1.0};
  double h{0.0};
  std::vector<double> nodes;

  std::size_t n() const { return nodes.size(); }
  bool radial() const { return kind == GridKind::radial; }
  /// Distance from node i to the Dirichlet boundary.
  double distance(std::size_t i) const;
};

/// Uniform partition of (0, size) into n interior nodes. No validation.
std::vector<double> uniform_nodes(double size, std::size_t n);

/// Throws InvalidArgument for n < 8, size <= 0, dim < 1 or interval with dim != 1.
Grid build_grid(GridKind kind, int dim, double size, std::size_t n);

/// d(x) = min(x, L - x) on intervals, R - r on balls.
Field boundary_distance(const Grid& grid);

/**
 * Conservative finite-volume form of the Dirichlet Laplacian.
 *
 * -Δ_h u = (K u) / volume, with K symmetric tridiagonal. On radial grids the
 * face areas are r^{n-1} (the constant sphere area is dropped everywhere) and
 * the first cell is [0, 3h/2], closed by a zero-flux face at the centre.
 */
struct Laplacian {
  std::vector<double> diag;    // K_ii
  std::vector<double> off;     // K_{i,i+1} = K_{i+1,i}, length n-1
  std::vector<double> volume;  // control volume of node i

  /// Returns -Δ_h u.
  Field apply(std::span<const double> u) const;
  /// Returns K u (no division by the control volumes).
  Field apply_stiffness(std::span<const double> u) const;
};

Laplacian build_laplacian(const Grid& grid);

/**
 * Quadrature weights q_i so that sum_i q_i F(x_i) approximates the
 * n-dimensional integral of F (radial factor r^{n-1} included).
 *
 * Trapezoid in the bulk. On the two cells next to each Dirichlet end the
 * integrand is modelled as d^beta * g(d) with g constant on [0, h] and linear
 * on [h, 2h], and the model integrated exactly; this keeps all weights
 * positive and captures integrable singularities d^beta with beta > -1.
 */
std::vector<double> quadrature_weights(const Grid& grid, double beta);

/// True when w decays like a multiple of d(x) at every Dirichlet end.
bool vanishes_linearly(const Grid& grid, std::span<const double> w);

/**
 * Precomputed weighted L^2 inner product <f, g> = ∫ f g w^exponent dμ.
 *
 * If w vanishes linearly at the boundary the end cells use beta = exponent;
 * otherwise w^exponent is treated as bounded and beta = 0. Exponents <= -1
 * against a linearly vanishing weight diverge and are rejected.
 */
class WeightedInnerProduct {
public:
  WeightedInnerProduct(const Grid& grid, std::span<const double> w, double exponent);

  double operator()(std::span<const double> f, std::span<const double> g) const;
  double norm(std::span<const double> f) const;
  /// Combined nodal weights q_i * w_i^exponent.
  const std::vector<double>& weights() const { return weights_; }

private:
  std::vector<double> weights_;
};

double weighted_inner_product(const Grid& grid, std::span<const double> f,
                              std::span<const double> g, std::span<const double> w,
                              double exponent);

}  // namespace pme

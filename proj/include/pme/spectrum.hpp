#pragma once

#include <string>
#include <vector>

#include "pme/geometry.hpp"
#include "pme/stationary.hpp"

namespace pme {

/**
 * Discrete generalized problem A ψ = μ W ψ.
 *
 * A is symmetric tridiagonal (stiffness of -Δ minus the diagonal potential
 * term), W the diagonal weight q_i Θ_i^{p-1}. With control-volume weights q
 * the discrete Θ is an exact eigenvector with μ = p, matching the
 * linearisation of the discrete flow; graded weights use the singular
 * end-cell quadrature of WeightedInnerProduct instead.
 */
struct LinearizedProblem {
  Grid grid;
  std::vector<double> diag;
  std::vector<double> off;
  std::vector<double> weight;
};

enum class SpectralWeights { control_volume, graded };

/// q_i Θ_i^{p-1} under the chosen quadrature rule.
std::vector<double> spectral_weight(const StationaryProfile& profile,
                                    SpectralWeights rule = SpectralWeights::control_volume);

/// With `potential = false` the zero-order term is dropped and A is the plain
/// Dirichlet stiffness matrix.
LinearizedProblem assemble_linearized(const StationaryProfile& profile, bool potential = true,
                                      SpectralWeights rule = SpectralWeights::control_volume);

/// Same operator against an arbitrary positive diagonal weight.
LinearizedProblem assemble_plain(const Grid& grid, std::vector<double> weight);

struct EigenSystem {
  Grid grid;
  std::vector<double> mus;
  std::vector<Field> psis;
  std::vector<double> weight;   ///< the W used; ⟨f,g⟩ = Σ W_i f_i g_i
  std::vector<double> residuals;///< ‖Aψ - μWψ‖ / ‖Wψ‖ per pair
  double gram_defect{};
  double weight_condition{};    ///< max W / min W
  bool cluster_warning{false};
  std::vector<std::string> log;

  std::size_t K() const { return mus.size(); }
  double inner(std::span<const double> f, std::span<const double> g) const;
};

/**
 * K smallest eigenpairs by Sturm bisection on B = W^{-1/2} A W^{-1/2},
 * shifted inverse iteration and W-weighted Gram-Schmidt deflation.
 * Throws InvalidArgument for K > N/4 and IterationStall if a pair misses `tol`.
 */
EigenSystem solve_eigenpairs(const LinearizedProblem& problem, std::size_t K, double tol = 1e-10);

struct SpectralGap {
  double gamma{};
  bool log_correction{false};  ///< μ_2 = 2 μ_1: the remainder carries a τ e^{-2τ} term
};

/// γ = min(μ_2/μ_1, 2) - 1.
SpectralGap spectral_gap_gamma(const EigenSystem& sys);

/// Interior sign changes, ignoring entries below `floor` · max|f|.
int sign_changes(std::span<const double> f, double floor = 1e-10);

}  // namespace pme

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pme {

/// General tridiagonal matrix; lower[i] = A(i+1,i), upper[i] = A(i,i+1).
struct Tridiagonal {
  std::vector<double> lower;
  std::vector<double> diag;
  std::vector<double> upper;

  explicit Tridiagonal(std::size_t n = 0) : lower(n ? n - 1 : 0), diag(n), upper(n ? n - 1 : 0) {}
  std::size_t n() const { return diag.size(); }
  std::vector<double> multiply(std::span<const double> x) const;
};

/// Thomas algorithm. Suitable for diagonally dominant or (row-scaled) SPD
/// systems; throws InvalidArgument on a zero pivot.
std::vector<double> solve_thomas(const Tridiagonal& a, std::span<const double> rhs);

/// Gaussian elimination with partial pivoting (LAPACK gtsv scheme). Used for
/// indefinite shifted systems in inverse iteration.
std::vector<double> solve_pivoted(const Tridiagonal& a, std::span<const double> rhs);

/// Number of eigenvalues strictly below x of the symmetric tridiagonal matrix
/// (diag, off), by the Sturm sequence of its LDL^T factorisation.
std::size_t sturm_count(std::span<const double> diag, std::span<const double> off, double x);

}  // namespace pme

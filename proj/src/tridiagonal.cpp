#include "pme/tridiagonal.hpp"

#include <cmath>
#include <utility>

#include "pme/error.hpp"

namespace pme {

std::vector<double> Tridiagonal::multiply(std::span<const double> x) const {
  const std::size_t n = diag.size();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = diag[i] * x[i];
    if (i > 0) s += lower[i - 1] * x[i - 1];
    if (i + 1 < n) s += upper[i] * x[i + 1];
    y[i] = s;
  }
  return y;
}

std::vector<double> solve_thomas(const Tridiagonal& a, std::span<const double> rhs) {
  const std::size_t n = a.n();
  std::vector<double> c(n), x(rhs.begin(), rhs.end());
  double piv = a.diag[0];
  if (piv == 0.0) throw InvalidArgument("zero pivot in tridiagonal solve");
  x[0] /= piv;
  for (std::size_t i = 1; i < n; ++i) {
    c[i - 1] = a.upper[i - 1] / piv;
    piv = a.diag[i] - a.lower[i - 1] * c[i - 1];
    if (piv == 0.0) throw InvalidArgument("zero pivot in tridiagonal solve");
    x[i] = (x[i] - a.lower[i - 1] * x[i - 1]) / piv;
  }
  for (std::size_t i = n - 1; i-- > 0;) x[i] -= c[i] * x[i + 1];
  return x;
}

std::vector<double> solve_pivoted(const Tridiagonal& a, std::span<const double> rhs) {
  const std::size_t n = a.n();
  // Row i of U holds (d[i], du[i], du2[i]) after elimination.
  std::vector<double> d(a.diag), du(a.upper), dl(a.lower), du2(n > 2 ? n - 2 : 0, 0.0);
  std::vector<double> b(rhs.begin(), rhs.end());
  du.resize(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::abs(d[i]) >= std::abs(dl[i])) {
      if (d[i] == 0.0) throw InvalidArgument("singular tridiagonal system");
      const double f = dl[i] / d[i];
      d[i + 1] -= f * du[i];
      b[i + 1] -= f * b[i];
    } else {
      const double f = d[i] / dl[i];
      d[i] = dl[i];
      const double t = d[i + 1];
      d[i + 1] = du[i] - f * t;
      du[i] = t;
      if (i + 2 < n) {
        du2[i] = du[i + 1];
        du[i + 1] = -f * du2[i];
      }
      std::swap(b[i], b[i + 1]);
      b[i + 1] -= f * b[i];
    }
  }
  if (d[n - 1] == 0.0) throw InvalidArgument("singular tridiagonal system");
  b[n - 1] /= d[n - 1];
  if (n > 1) b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
  for (std::size_t i = n > 2 ? n - 2 : 0; i-- > 0;)
    b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
  return b;
}

std::size_t sturm_count(std::span<const double> diag, std::span<const double> off, double x) {
  std::size_t count = 0;
  double q = diag[0] - x;
  constexpr double tiny = 1e-300;
  if (q < 0.0) ++count;
  for (std::size_t i = 1; i < diag.size(); ++i) {
    if (q == 0.0) q = tiny;
    q = diag[i] - x - off[i - 1] * off[i - 1] / q;
    if (q < 0.0) ++count;
  }
  return count;
}

}  // namespace pme

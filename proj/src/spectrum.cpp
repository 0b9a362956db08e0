#include "pme/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "pme/error.hpp"
#include "pme/tridiagonal.hpp"

namespace pme {

LinearizedProblem assemble_plain(const Grid& grid, std::vector<double> weight) {
  if (weight.size() != grid.n()) throw InvalidArgument("weight does not match the grid");
  for (double w : weight)
    if (!(w > 0.0)) throw InvalidArgument("eigenproblem weight must be positive");
  const Laplacian lap = build_laplacian(grid);
  return {grid, lap.diag, lap.off, std::move(weight)};
}

std::vector<double> spectral_weight(const StationaryProfile& profile, SpectralWeights rule) {
  const double p = profile.p;
  if (rule == SpectralWeights::graded)
    return WeightedInnerProduct(profile.grid, profile.theta, p - 1.0).weights();
  std::vector<double> w = build_laplacian(profile.grid).volume;
  for (std::size_t i = 0; i < w.size(); ++i) w[i] *= std::pow(profile.theta[i], p - 1.0);
  return w;
}

LinearizedProblem assemble_linearized(const StationaryProfile& profile, bool potential,
                                      SpectralWeights rule) {
  const double p = profile.p;
  LinearizedProblem prob = assemble_plain(profile.grid, spectral_weight(profile, rule));
  if (potential) {
    const double c = p * p / (1.0 - p);
    for (std::size_t i = 0; i < prob.diag.size(); ++i) prob.diag[i] -= c * prob.weight[i];
  }
  return prob;
}

double EigenSystem::inner(std::span<const double> f, std::span<const double> g) const {
  double s = 0.0;
  for (std::size_t i = 0; i < weight.size(); ++i) s += weight[i] * (f[i] * g[i]);
  return s;
}

namespace {

double kth_eigenvalue(std::span<const double> d, std::span<const double> e, std::size_t k,
                      double lo, double hi) {
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (sturm_count(d, e, mid) > k ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

// Scale so that the first local maximum of |ψ| from the left end is positive.
// On radial grids the left end is the centre, itself an extremum.
void normalise_sign(Field& psi, bool radial) {
  std::size_t i = 0;
  if (!radial)
    while (i + 1 < psi.size() && std::abs(psi[i + 1]) > std::abs(psi[i])) ++i;
  if (psi[i] < 0.0)
    for (double& v : psi) v = -v;
}

}  // namespace

EigenSystem solve_eigenpairs(const LinearizedProblem& prob, std::size_t K, double tol) {
  const std::size_t n = prob.diag.size();
  if (K < 1 || 4 * K > n)
    throw InvalidArgument(fmt::format("requested {} eigenpairs on {} nodes (need K <= N/4)", K, n));
  if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");

  EigenSystem sys;
  sys.grid = prob.grid;
  sys.weight = prob.weight;
  const auto [wmin, wmax] = std::minmax_element(prob.weight.begin(), prob.weight.end());
  sys.weight_condition = *wmax / *wmin;
  sys.log.push_back(fmt::format("weight condition {:.3e}", sys.weight_condition));

  std::vector<double> s(n), b(n), e(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = 1.0 / std::sqrt(prob.weight[i]);
    b[i] = prob.diag[i] * s[i] * s[i];
  }
  for (std::size_t i = 0; i + 1 < n; ++i) e[i] = prob.off[i] * s[i] * s[i + 1];

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::abs(e[i - 1]) : 0.0) + (i + 1 < n ? std::abs(e[i]) : 0.0);
    lo = std::min(lo, b[i] - r);
    hi = std::max(hi, b[i] + r);
  }
  const double scale = std::max(std::abs(lo), std::abs(hi));

  auto residual = [&](const Field& psi, double mu) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double a = prob.diag[i] * psi[i];
      if (i > 0) a += prob.off[i - 1] * psi[i - 1];
      if (i + 1 < n) a += prob.off[i] * psi[i + 1];
      const double wpsi = prob.weight[i] * psi[i];
      num += (a - mu * wpsi) * (a - mu * wpsi);
      den += wpsi * wpsi;
    }
    return std::sqrt(num / den);
  };

  for (std::size_t j = 0; j < K; ++j) {
    double mu = kth_eigenvalue(b, e, j, lo, hi);
    Field y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = 1.0 + 0.25 * std::sin(0.37 * double(i + 1) * double(j + 1));

    Field psi(n);
    double res = std::numeric_limits<double>::infinity();
    for (int attempt = 0; attempt < 4 && !(res <= tol); ++attempt) {
      Tridiagonal shifted(n);
      const double shift = mu + (attempt + 1) * 64.0 * std::numeric_limits<double>::epsilon() * scale;
      for (std::size_t i = 0; i < n; ++i) shifted.diag[i] = b[i] - shift;
      shifted.lower = e;
      shifted.upper = e;
      for (int sweep = 0; sweep < 3; ++sweep) {
        y = solve_pivoted(shifted, y);
        // Deflate against the converged pairs in the W-inner product (Euclidean in y).
        for (std::size_t l = 0; l < j; ++l) {
          double c = 0.0;
          for (std::size_t i = 0; i < n; ++i) c += sys.psis[l][i] / s[i] * y[i];
          for (std::size_t i = 0; i < n; ++i) y[i] -= c * sys.psis[l][i] / s[i];
        }
        double nrm = 0.0;
        for (double v : y) nrm += v * v;
        nrm = std::sqrt(nrm);
        for (double& v : y) v /= nrm;
      }
      // Rayleigh quotient refresh.
      double rq = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double by = b[i] * y[i];
        if (i > 0) by += e[i - 1] * y[i - 1];
        if (i + 1 < n) by += e[i] * y[i + 1];
        rq += y[i] * by;
      }
      mu = rq;
      for (std::size_t i = 0; i < n; ++i) psi[i] = s[i] * y[i];
      res = residual(psi, mu);
    }
    if (!(res <= tol))
      throw IterationStall(fmt::format("eigenpair {} stalled at residual {:.3e}", j + 1, res));
    normalise_sign(psi, prob.grid.radial());
    if (j == 0)
      for (double& v : psi) v = std::max(v, 0.0);
    sys.mus.push_back(mu);
    sys.psis.push_back(std::move(psi));
    sys.residuals.push_back(res);
  }

  for (std::size_t j = 0; j + 1 < K; ++j) {
    if (sys.mus[j + 1] - sys.mus[j] < 10.0 * tol) {
      sys.cluster_warning = true;
      sys.log.push_back(fmt::format("cluster: mu_{} and mu_{} differ by {:.3e}", j + 1, j + 2,
                                    sys.mus[j + 1] - sys.mus[j]));
    }
  }
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t j = 0; j <= i; ++j)
      sys.gram_defect = std::max(
          sys.gram_defect, std::abs(sys.inner(sys.psis[i], sys.psis[j]) - (i == j ? 1.0 : 0.0)));
  return sys;
}

SpectralGap spectral_gap_gamma(const EigenSystem& sys) {
  if (sys.K() < 2) throw InvalidArgument("spectral gap needs at least two eigenpairs");
  const double ratio = sys.mus[1] / sys.mus[0];
  SpectralGap gap;
  gap.gamma = std::min(ratio, 2.0) - 1.0;
  gap.log_correction = std::abs(ratio - 2.0) <= 1e-9 * 2.0;
  return gap;
}

int sign_changes(std::span<const double> f, double floor) {
  double fmax = 0.0;
  for (double v : f) fmax = std::max(fmax, std::abs(v));
  int changes = 0, last = 0;
  for (double v : f) {
    if (std::abs(v) <= floor * fmax) continue;
    const int sgn = v > 0.0 ? 1 : -1;
    if (last != 0 && sgn != last) ++changes;
    last = sgn;
  }
  return changes;
}

}  // namespace pme

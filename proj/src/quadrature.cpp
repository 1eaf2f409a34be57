#include "qfield/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qfield/error.hpp"

namespace qfield {

QuadratureRule golub_welsch(std::span<const double> diagonal,
                            std::span<const double> off_diagonal, double mass) {
  const std::size_t n = diagonal.size();
  if (n == 0) throw DomainError("empty Jacobi matrix");
  if (off_diagonal.size() + 1 < n) throw DomainError("off-diagonal too short");

  std::vector<double> d(diagonal.begin(), diagonal.end());
  std::vector<double> e(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) e[i] = off_diagonal[i];

  const auto ni = static_cast<long>(n);
  for (long l = 0; l < ni; ++l) {
    int iter = 0;
    long m;
    do {
      for (m = l; m < ni - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) + dd == dd) break;
      }
      if (m != l) {
        if (iter++ == 100) throw NumericalError("Golub-Welsch QL iteration did not converge");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        long i;
        for (i = m - 1; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
        }
        if (r == 0.0 && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }

  // Polish each node by Newton on the characteristic polynomial and take the
  // weight from the Christoffel sum 1/sum_k p_k(x)^2; the squared eigenvector
  // entry is only accurate in absolute terms, which loses the tiny tail weights.
  std::vector<double> off(n, 1.0);
  for (std::size_t i = 0; i + 1 < n; ++i) off[i] = off_diagonal[i];
  std::vector<double> w(n);
  for (std::size_t k = 0; k < n; ++k) {
    double x = d[k];
    double christoffel = 0.0;
    for (int it = 0; it < 3; ++it) {
      double p0 = 0.0, p1 = 1.0, dp0 = 0.0, dp1 = 0.0, sum = 1.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double eprev = j == 0 ? 0.0 : off[j - 1];
        const double p2 = ((x - diagonal[j]) * p1 - eprev * p0) / off[j];
        const double dp2 = ((x - diagonal[j]) * dp1 + p1 - eprev * dp0) / off[j];
        p0 = p1;
        p1 = p2;
        dp0 = dp1;
        dp1 = dp2;
        if (j + 1 < n) sum += p1 * p1;
      }
      christoffel = sum;
      if (it == 2 || dp1 == 0.0 || !std::isfinite(dp1)) break;
      const double step = p1 / dp1;
      if (!(std::abs(step) < 1e-8 * (1.0 + std::abs(x)))) break;
      x -= step;
    }
    d[k] = x;
    w[k] = std::isfinite(christoffel) ? mass / christoffel : 0.0;
  }

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
  QuadratureRule rule;
  rule.order = n;
  rule.nodes.reserve(n);
  rule.weights.reserve(n);
  for (std::size_t k : idx) {
    rule.nodes.push_back(d[k]);
    rule.weights.push_back(w[k]);
  }
  return rule;
}

QuadratureRule gauss_legendre(std::size_t n, double lo, double hi) {
  std::vector<double> diag(n, 0.0), off(n > 0 ? n - 1 : 0);
  for (std::size_t k = 1; k < n; ++k) {
    const double kk = static_cast<double>(k);
    off[k - 1] = kk / std::sqrt(4.0 * kk * kk - 1.0);
  }
  QuadratureRule rule = golub_welsch(diag, off, 2.0);
  const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
  for (std::size_t i = 0; i < n; ++i) {
    rule.nodes[i] = mid + half * rule.nodes[i];
    rule.weights[i] *= half;
  }
  return rule;
}

}  // namespace qfield

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qfield {

struct QuadratureRule {
  std::vector<double> nodes;    // ascending
  std::vector<double> weights;  // positive, sum to the total mass
  std::size_t order = 0;

  template <class F>
  double integrate(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
    return s;
  }
};

// Gauss rule from a Jacobi matrix (Golub-Welsch): nodes are the eigenvalues of
// the symmetric tridiagonal matrix with the given diagonal and off-diagonal,
// found by implicit-shift QL without eigenvectors and then Newton-polished.
// Weights are mass / sum_k p_k(x)^2 over the orthonormal recurrence, which
// equals mass * (first eigenvector component)^2 but keeps relative accuracy
// for tiny weights. O(n^2).
QuadratureRule golub_welsch(std::span<const double> diagonal,
                            std::span<const double> off_diagonal, double mass = 1.0);

// n-point Gauss-Legendre rule on [lo, hi].
QuadratureRule gauss_legendre(std::size_t n, double lo = -1.0, double hi = 1.0);

}  // namespace qfield

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qfield {

// [n]_q = 1 + q + ... + q^{n-1}; the three-term recurrence coefficient beta_n.
double q_integer(std::size_t n, double q);

// prod_{k=1}^n [k]_q, the squared L2 norm of the monic polynomial Q_n.
double monic_norm_sq(double q, std::size_t n);

// S_N = sum_{n=1}^N 1/b_n with b_n = sqrt([n]_q), N partial sums. Divergence of
// S_N is the Carleman witness for moment determinacy.
std::vector<double> carleman_partial_sums(double q, std::size_t N);

enum class Normalization { Monic, Orthonormal };

inline constexpr std::size_t kDefaultMaxDegree = 64;

// Continuous q-Hermite polynomials in the standardized variable, evaluated by
// forward recurrence:
//   monic        x Q_n = Q_{n+1} + beta_n Q_{n-1}
//   orthonormal  x Q_n = b_{n+1} Q_{n+1} + b_n Q_{n-1},   b_n = sqrt(beta_n)
// with Q_{-1} = 0, Q_0 = 1.
//
// At q = -1, b_n = 0 for n >= 2 and the orthonormal Q_n (n >= 2) vanish in
// L2(mu); they evaluate to 0.
class PolyFamily {
 public:
  PolyFamily(double q, Normalization norm, std::size_t max_degree = kDefaultMaxDegree);

  double q() const { return q_; }
  Normalization normalization() const { return norm_; }
  std::size_t max_degree() const { return max_degree_; }

  double beta(std::size_t n) const { return beta_.at(n); }
  double b(std::size_t n) const { return b_.at(n); }

  // Q_n(x); throws DomainError when n > max_degree.
  double eval(std::size_t n, double x) const;

  // [Q_0(x), ..., Q_{n_max}(x)].
  std::vector<double> eval_all(std::size_t n_max, double x) const;

  // Fills out[k] = Q_k(x) for k < out.size().
  void eval_into(double x, std::span<double> out) const;

 private:
  void check_degree(std::size_t n) const;

  double q_;
  Normalization norm_;
  std::size_t max_degree_;
  std::vector<double> beta_;  // beta_[n] = [n]_q, n = 0..max_degree+1
  std::vector<double> b_;
};

}  // namespace qfield

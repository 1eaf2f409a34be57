#include "qfield/qpoly.hpp"

#include <cmath>
#include <string>

#include "qfield/error.hpp"

namespace qfield {

double q_integer(std::size_t n, double q) {
  if (n == 0) return 0.0;
  if (q == 1.0) return static_cast<double>(n);
  if (std::abs(1.0 - q) < 1e-8) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) sum = sum * q + 1.0;
    return sum;
  }
  if (q > 0.0) {
    return -std::expm1(static_cast<double>(n) * std::log(q)) / (1.0 - q);
  }
  return (1.0 - std::pow(q, static_cast<double>(n))) / (1.0 - q);
}

double monic_norm_sq(double q, std::size_t n) {
  double prod = 1.0;
  for (std::size_t k = 1; k <= n; ++k) prod *= q_integer(k, q);
  return prod;
}

std::vector<double> carleman_partial_sums(double q, std::size_t N) {
  if (!(q > -1.0 && q <= 1.0)) throw DomainError("requires -1 < q <= 1");
  std::vector<double> sums(N);
  double s = 0.0;
  for (std::size_t n = 1; n <= N; ++n) {
    s += 1.0 / std::sqrt(q_integer(n, q));
    sums[n - 1] = s;
  }
  return sums;
}

PolyFamily::PolyFamily(double q, Normalization norm, std::size_t max_degree)
    : q_(q), norm_(norm), max_degree_(max_degree) {
  if (!(q >= -1.0 && q <= 1.0)) throw DomainError("requires -1 <= q <= 1");
  beta_.resize(max_degree + 2);
  b_.resize(max_degree + 2);
  for (std::size_t n = 0; n < beta_.size(); ++n) {
    beta_[n] = q_integer(n, q);
    // [n]_{-1} is 0 for even n; keep it exactly 0 rather than a rounding crumb.
    if (beta_[n] < 0.0) beta_[n] = 0.0;
    b_[n] = std::sqrt(beta_[n]);
  }
}

void PolyFamily::check_degree(std::size_t n) const {
  if (n > max_degree_) {
    throw DomainError("degree " + std::to_string(n) + " exceeds max_degree " +
                      std::to_string(max_degree_));
  }
}

double PolyFamily::eval(std::size_t n, double x) const {
  check_degree(n);
  double prev = 0.0, cur = 1.0;
  if (norm_ == Normalization::Monic) {
    for (std::size_t k = 0; k < n; ++k) {
      const double next = x * cur - beta_[k] * prev;
      prev = cur;
      cur = next;
    }
    return cur;
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (b_[k + 1] == 0.0) return 0.0;
    const double next = (x * cur - b_[k] * prev) / b_[k + 1];
    prev = cur;
    cur = next;
  }
  return cur;
}

std::vector<double> PolyFamily::eval_all(std::size_t n_max, double x) const {
  check_degree(n_max);
  std::vector<double> out(n_max + 1);
  eval_into(x, out);
  return out;
}

void PolyFamily::eval_into(double x, std::span<double> out) const {
  if (out.empty()) return;
  check_degree(out.size() - 1);
  out[0] = 1.0;
  double prev = 0.0;
  for (std::size_t k = 0; k + 1 < out.size(); ++k) {
    const double cur = out[k];
    if (norm_ == Normalization::Monic) {
      out[k + 1] = x * cur - beta_[k] * prev;
    } else {
      out[k + 1] = b_[k + 1] == 0.0 ? 0.0 : (x * cur - b_[k] * prev) / b_[k + 1];
    }
    prev = cur;
  }
}

}  // namespace qfield

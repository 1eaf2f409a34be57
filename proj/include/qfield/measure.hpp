#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "qfield/quadrature.hpp"
#include "qfield/rng.hpp"

namespace qfield {

enum class MeasureKind { TwoPoint, QNormal, Gaussian };

// Parameters within this distance of -1 / +1 use the exact two-point / Gaussian
// branches.
inline constexpr double kEndpointSnap = 1e-6;

MeasureKind measure_kind(double q);

// q snapped onto the branch it is routed to: -1, 1, or q itself.
double effective_q(double q);

// Number of infinite-product factors kept: smallest K with |q|^K < 1e-16,
// capped at 2048.
std::size_t product_truncation(double q);

// q-normal density from the product representation
//   f(x) = sqrt(1-q) c(q)/(2 pi) * sqrt(4-(1-q)x^2)
//          * prod_{k>=1} [(1+q^k)^2 - (1-q) q^k x^2],   c(q) = prod_{k>=1} (1-q^k)
// on |x| <= 2/sqrt(1-q), zero outside. No renormalization; see Measure.
// Requires -1 < q < 1.
double density(double q, double x);

struct CdfNode {
  double phi;  // angle in [0, pi]; x = -2 cos(phi)/sqrt(1-q)
  double F;    // cdf
  double g;    // dF/dphi
};

// The orthogonality measure of the q-Hermite family, standardized to mean 0
// and variance 1: two-point +-1 at q = -1, q-normal on (-1,1), N(0,1) at q = 1.
//
// On the q-normal branch the cdf is tabulated in the angle variable phi, where
// F is smooth up to the support endpoints, and interpolated by monotone
// piecewise-cubic Hermite segments using the exact derivative.
class Measure {
 public:
  explicit Measure(double q);

  double q() const { return q_; }
  MeasureKind kind() const { return kind_; }
  double support_halfwidth() const { return halfwidth_; }
  std::size_t product_truncation() const { return truncation_; }

  // Normalization of the analytic product form as found by quadrature, and
  // whether the density had to be rescaled (|Z-1| > 1e-6).
  double analytic_mass() const { return analytic_mass_; }
  bool renormalized() const { return renormalized_; }

  // Density (QNormal, Gaussian). The two-point branch has none: DomainError.
  double density(double x) const;

  // P(X <= x) and P(X < x); clamped outside the support.
  double cdf(double x) const;
  double cdf_left(double x) const;

  // Smallest x with F(x) >= u; u in (0,1).
  double quantile(double u) const;

  double sample_one(Rng& rng) const;
  std::vector<double> sample(std::uint64_t seed, std::size_t count) const;

  const std::vector<CdfNode>& cdf_table() const { return table_; }

  // Angle <-> x on the q-normal branch.
  double x_of_phi(double phi) const;
  double phi_of_x(double x) const;
  // Density of the angle, dF/dphi, renormalization applied.
  double angle_density(double phi) const;
  // Inverse cdf in the angle variable (q-normal branch).
  double phi_quantile(double u) const;

 private:
  void build_table();
  double table_cdf_phi(double phi) const;

  double q_;
  MeasureKind kind_;
  double halfwidth_;
  std::size_t truncation_ = 0;
  double c_q_ = 1.0;  // prod (1-q^k)
  double analytic_mass_ = 1.0;
  double scale_ = 1.0;
  bool renormalized_ = false;
  std::vector<CdfNode> table_;
};

// Moments m_0..m_{n_max} from the recurrence: x^n expanded in the monic Q basis,
// m_n is the Q_0 coefficient. Odd moments are exactly 0.
std::vector<double> moments(double q, std::size_t n_max);

// Gauss rule for the measure from the orthonormal recurrence coefficients.
// Exact for polynomials of degree <= 2 order - 1. The two-point branch returns
// the exact rule {-1, 1} with weights 1/2 regardless of order; the Gaussian
// branch is Gauss-Hermite. Throws DomainError when order < 2 or when
// 2 order - 1 < degree_budget.
QuadratureRule build_quadrature(double q, std::size_t order, std::size_t degree_budget = 0);

}  // namespace qfield

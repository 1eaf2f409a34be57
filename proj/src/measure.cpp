#include "qfield/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "qfield/error.hpp"
#include "qfield/qpoly.hpp"

namespace qfield {
namespace {

constexpr std::size_t kTableNodes = 4096;
constexpr std::size_t kPanelPoints = 8;
constexpr std::size_t kMassPoints = 4096;
constexpr double kRenormTolerance = 1e-6;

// prod_{k=1}^K [(1-q^k)^2 + 4 q^k sin^2(phi)], the same factor as
// (1+q^k)^2 - (1-q) q^k x^2 written without cancellation near q^k = 1.
double q_factor_product(double q, double sin2, std::size_t K) {
  double prod = 1.0;
  double p = 1.0;
  for (std::size_t k = 1; k <= K; ++k) {
    p *= q;
    const double om = 1.0 - p;
    prod *= om * om + 4.0 * p * sin2;
  }
  return prod;
}

double q_pochhammer_inf(double q, std::size_t K) {
  double prod = 1.0, p = 1.0;
  for (std::size_t k = 1; k <= K; ++k) {
    p *= q;
    prod *= 1.0 - p;
  }
  return prod;
}

void require_open(double q) {
  if (!(q > -1.0 && q < 1.0)) throw DomainError("density requires -1 < q < 1");
}

}  // namespace

MeasureKind measure_kind(double q) {
  if (!(q >= -1.0 && q <= 1.0)) throw DomainError("requires -1 <= q <= 1");
  if (q <= -1.0 + kEndpointSnap) return MeasureKind::TwoPoint;
  if (q >= 1.0 - kEndpointSnap) return MeasureKind::Gaussian;
  return MeasureKind::QNormal;
}

double effective_q(double q) {
  switch (measure_kind(q)) {
    case MeasureKind::TwoPoint: return -1.0;
    case MeasureKind::Gaussian: return 1.0;
    case MeasureKind::QNormal: break;
  }
  return q;
}

std::size_t product_truncation(double q) {
  const double aq = std::abs(q);
  if (aq == 0.0) return 0;
  std::size_t k = 0;
  double p = 1.0;
  while (p >= 1e-16 && k < 2048) {
    p *= aq;
    ++k;
  }
  return k;
}

double density(double q, double x) {
  require_open(q);
  const double s2 = 1.0 - (1.0 - q) * x * x / 4.0;  // sin^2 of the angle
  if (s2 <= 0.0) return 0.0;
  const std::size_t K = product_truncation(q);
  const double c = q_pochhammer_inf(q, K);
  return std::sqrt(1.0 - q) * c / (2.0 * std::numbers::pi) * 2.0 * std::sqrt(s2) *
         q_factor_product(q, s2, K);
}

Measure::Measure(double q) : q_(q), kind_(measure_kind(q)) {
  switch (kind_) {
    case MeasureKind::TwoPoint:
      halfwidth_ = 1.0;
      break;
    case MeasureKind::Gaussian:
      halfwidth_ = std::numeric_limits<double>::infinity();
      break;
    case MeasureKind::QNormal:
      halfwidth_ = 2.0 / std::sqrt(1.0 - q_);
      truncation_ = qfield::product_truncation(q_);
      c_q_ = q_pochhammer_inf(q_, truncation_);
      // Periodic analytic integrand: the trapezoid rule is spectrally accurate.
      {
        double sum = 0.0;
        const double h = std::numbers::pi / static_cast<double>(kMassPoints);
        for (std::size_t i = 1; i < kMassPoints; ++i) sum += angle_density(h * i);
        analytic_mass_ = sum * h;
      }
      if (std::abs(analytic_mass_ - 1.0) > kRenormTolerance) {
        renormalized_ = true;
        scale_ = 1.0 / analytic_mass_;
      }
      build_table();
      break;
  }
}

double Measure::x_of_phi(double phi) const { return -2.0 * std::cos(phi) / std::sqrt(1.0 - q_); }

double Measure::phi_of_x(double x) const {
  const double c = std::clamp(-x * std::sqrt(1.0 - q_) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

double Measure::angle_density(double phi) const {
  const double s = std::sin(phi);
  const double s2 = s * s;
  return scale_ * c_q_ / (2.0 * std::numbers::pi) * 4.0 * s2 *
         q_factor_product(q_, s2, truncation_);
}

void Measure::build_table() {
  const double pi = std::numbers::pi;
  const QuadratureRule gl = gauss_legendre(kPanelPoints, 0.0, 1.0);
  auto panel = [&](double lo, double hi) {
    double s = 0.0;
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      s += gl.weights[i] * angle_density(lo + (hi - lo) * gl.nodes[i]);
    }
    return s * (hi - lo);
  };

  // Pass 1: uniform angle grid.
  std::vector<double> grid(kTableNodes + 1), cum(kTableNodes + 1, 0.0);
  for (std::size_t i = 0; i <= kTableNodes; ++i) grid[i] = pi * i / kTableNodes;
  for (std::size_t i = 1; i <= kTableNodes; ++i) cum[i] = cum[i - 1] + panel(grid[i - 1], grid[i]);
  const double total = cum.back();

  // Pass 2: add nodes at equal-probability targets, then integrate exactly.
  std::vector<double> phis = grid;
  std::size_t j = 0;
  for (std::size_t i = 1; i < kTableNodes; ++i) {
    const double target = total * static_cast<double>(i) / kTableNodes;
    while (j + 1 < kTableNodes && cum[j + 1] < target) ++j;
    const double span = cum[j + 1] - cum[j];
    const double t = span > 0.0 ? (target - cum[j]) / span : 0.0;
    phis.push_back(grid[j] + t * (grid[j + 1] - grid[j]));
  }
  std::sort(phis.begin(), phis.end());
  std::vector<double> nodes;
  nodes.reserve(phis.size());
  for (double p : phis) {
    if (nodes.empty() || p - nodes.back() > 1e-12) nodes.push_back(p);
  }
  nodes.back() = pi;

  table_.resize(nodes.size());
  double F = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i > 0) F += panel(nodes[i - 1], nodes[i]);
    table_[i] = {nodes[i], F, angle_density(nodes[i])};
  }
  const double end = table_.back().F;
  for (auto& n : table_) {
    n.F /= end;
    n.g /= end;
  }
  table_.back().F = 1.0;
}

namespace {

// Monotone cubic Hermite on one table segment (Fritsch-Carlson limited slopes).
struct Segment {
  double phi0, h, F0, dF, m0, m1;

  Segment(const CdfNode& a, const CdfNode& b)
      : phi0(a.phi), h(b.phi - a.phi), F0(a.F), dF(b.F - a.F), m0(a.g * h), m1(b.g * h) {
    if (dF <= 0.0) {
      m0 = m1 = 0.0;
      return;
    }
    const double al = m0 / dF, be = m1 / dF;
    const double r2 = al * al + be * be;
    if (r2 > 9.0) {
      const double tau = 3.0 / std::sqrt(r2);
      m0 *= tau;
      m1 *= tau;
    }
  }

  double at(double phi) const {
    const double t = std::clamp((phi - phi0) / h, 0.0, 1.0);
    const double t2 = t * t, t3 = t2 * t;
    return F0 + dF * (3.0 * t2 - 2.0 * t3) + m0 * (t3 - 2.0 * t2 + t) + m1 * (t3 - t2);
  }
};

}  // namespace

double Measure::table_cdf_phi(double phi) const {
  if (phi <= 0.0) return 0.0;
  if (phi >= std::numbers::pi) return 1.0;
  auto it = std::upper_bound(table_.begin(), table_.end(), phi,
                             [](double v, const CdfNode& n) { return v < n.phi; });
  const std::size_t j = static_cast<std::size_t>(it - table_.begin()) - 1;
  return Segment(table_[j], table_[j + 1]).at(phi);
}

double Measure::density(double x) const {
  switch (kind_) {
    case MeasureKind::TwoPoint:
      throw DomainError("the two-point measure has no density");
    case MeasureKind::Gaussian:
      return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    case MeasureKind::QNormal:
      break;
  }
  if (std::abs(x) >= halfwidth_) return 0.0;
  return scale_ * qfield::density(q_, x);
}

double Measure::cdf(double x) const {
  switch (kind_) {
    case MeasureKind::TwoPoint:
      return x < -1.0 ? 0.0 : (x < 1.0 ? 0.5 : 1.0);
    case MeasureKind::Gaussian:
      return 0.5 * std::erfc(-x / std::numbers::sqrt2);
    case MeasureKind::QNormal:
      break;
  }
  if (x <= -halfwidth_) return 0.0;
  if (x >= halfwidth_) return 1.0;
  return table_cdf_phi(phi_of_x(x));
}

double Measure::cdf_left(double x) const {
  if (kind_ == MeasureKind::TwoPoint) return x <= -1.0 ? 0.0 : (x <= 1.0 ? 0.5 : 1.0);
  return cdf(x);
}

double Measure::phi_quantile(double u) const {
  if (kind_ != MeasureKind::QNormal) throw DomainError("angle quantile needs a q-normal measure");
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return std::numbers::pi;
  auto it = std::lower_bound(table_.begin(), table_.end(), u,
                             [](const CdfNode& n, double v) { return n.F < v; });
  std::size_t j = static_cast<std::size_t>(it - table_.begin());
  if (j == 0) j = 1;
  const Segment seg(table_[j - 1], table_[j]);
  double lo = table_[j - 1].phi, hi = table_[j].phi;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (seg.at(mid) < u) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double Measure::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("quantile requires 0 < u < 1");
  switch (kind_) {
    case MeasureKind::TwoPoint:
      return u <= 0.5 ? -1.0 : 1.0;
    case MeasureKind::Gaussian: {
      double lo = -40.0, hi = 40.0;
      for (int i = 0; i < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo)); ++i) {
        const double mid = 0.5 * (lo + hi);
        if (cdf(mid) < u) lo = mid; else hi = mid;
      }
      return 0.5 * (lo + hi);
    }
    case MeasureKind::QNormal:
      break;
  }
  return x_of_phi(phi_quantile(u));
}

double Measure::sample_one(Rng& rng) const {
  switch (kind_) {
    case MeasureKind::TwoPoint:
      return rng.uniform() < 0.5 ? -1.0 : 1.0;
    case MeasureKind::Gaussian:
      return rng.normal();
    case MeasureKind::QNormal:
      break;
  }
  return x_of_phi(phi_quantile(rng.uniform()));
}

std::vector<double> Measure::sample(std::uint64_t seed, std::size_t count) const {
  Rng rng(seed);
  std::vector<double> out(count);
  for (auto& v : out) v = sample_one(rng);
  return out;
}

std::vector<double> moments(double q, std::size_t n_max) {
  if (!(q >= -1.0 && q <= 1.0)) throw DomainError("requires -1 <= q <= 1");
  std::vector<double> beta(n_max + 2);
  for (std::size_t k = 0; k < beta.size(); ++k) beta[k] = std::max(0.0, q_integer(k, q));

  // coeff[k]: coefficient of Q_k in the expansion of x^n.
  std::vector<double> coeff(n_max + 2, 0.0), next(n_max + 2, 0.0);
  coeff[0] = 1.0;
  std::vector<double> m(n_max + 1, 0.0);
  m[0] = 1.0;
  for (std::size_t n = 1; n <= n_max; ++n) {
    // x Q_k = Q_{k+1} + beta_k Q_{k-1}
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      if (coeff[k] == 0.0) continue;
      next[k + 1] += coeff[k];
      if (k >= 1) next[k - 1] += beta[k] * coeff[k];
    }
    coeff.swap(next);
    m[n] = (n % 2 == 1) ? 0.0 : coeff[0];
  }
  return m;
}

QuadratureRule build_quadrature(double q, std::size_t order, std::size_t degree_budget) {
  if (order < 2) throw DomainError("quadrature order must be at least 2");
  if (2 * order - 1 < degree_budget) {
    throw DomainError("quadrature order too small for the requested degree budget");
  }
  const MeasureKind kind = measure_kind(q);
  if (kind == MeasureKind::TwoPoint) {
    QuadratureRule rule;
    rule.nodes = {-1.0, 1.0};
    rule.weights = {0.5, 0.5};
    rule.order = 2;
    return rule;
  }
  const double qq = kind == MeasureKind::Gaussian ? 1.0 : q;
  std::vector<double> diag(order, 0.0), off(order - 1);
  for (std::size_t k = 1; k < order; ++k) off[k - 1] = std::sqrt(q_integer(k, qq));
  QuadratureRule rule = golub_welsch(diag, off, 1.0);
  // Symmetric measure: enforce exact node symmetry.
  for (std::size_t i = 0; i < order / 2; ++i) {
    const std::size_t j = order - 1 - i;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = rule.weights[j] = w;
  }
  if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
  return rule;
}

}  // namespace qfield

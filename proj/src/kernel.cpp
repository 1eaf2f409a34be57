#include "qfield/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/multiprecision/mpfr.hpp>

#include "qfield/error.hpp"
#include "qfield/qpoly.hpp"

namespace qfield {
namespace {

using boost::multiprecision::mpfr_float;

constexpr double kSeriesRelTol = 1e-13;
constexpr double kDivergenceGuard = 1e12;
constexpr double kClampSlack = 1e-14;

double to_double(double v) { return v; }
double to_double(const mpfr_float& v) { return v.convert_to<double>(); }

class PrecisionGuard {
 public:
  explicit PrecisionGuard(unsigned digits) : saved_(mpfr_float::default_precision()) {
    mpfr_float::default_precision(digits);
  }
  ~PrecisionGuard() { mpfr_float::default_precision(saved_); }
  PrecisionGuard(const PrecisionGuard&) = delete;
  PrecisionGuard& operator=(const PrecisionGuard&) = delete;

 private:
  unsigned saved_;
};

// 1e12 times the largest value the kernel can take at (q, rho): each product
// denominator is at least (1-|rho q^k|)^2.
double divergence_limit(double q, double rho) {
  double log_max = 0.0, p = 1.0;
  for (std::size_t k = 0; k < 2048 && std::abs(p) >= 1e-16; ++k) {
    log_max += std::log1p(-rho * rho * p) - 4.0 * std::log1p(-std::abs(rho * p));
    p *= q;
  }
  return std::exp(std::min(std::log(kDivergenceGuard) + log_max, 700.0));
}

template <class T>
SeriesSum sum_series(double q, double rho, double x, double y, std::size_t n_max) {
  using std::abs;
  using std::sqrt;
  const T tq(q), trho(rho), tx(x), ty(y);
  T beta(0), b_prev(0);
  T px0(0), px1(1), py0(0), py1(1);
  T sum(1), abs_sum(1), rn(1);
  const double limit = std::abs(q) < 1.0 ? divergence_limit(q, rho) : kDivergenceGuard;
  std::size_t n = 0;
  for (n = 1; n <= n_max; ++n) {
    beta = tq * beta + 1;
    if (!(beta > 0)) break;  // q = -1: every later orthonormal Q_n vanishes on the support
    const T b = sqrt(beta);
    T nx = (tx * px1 - b_prev * px0) / b;
    T ny = (ty * py1 - b_prev * py0) / b;
    px0 = px1;
    px1 = nx;
    py0 = py1;
    py1 = ny;
    b_prev = b;
    rn *= trho;
    const T term = rn * px1 * py1;
    sum += term;
    abs_sum += abs(term);
    if (!(abs(sum) <= limit)) {
      throw NumericalError("kernel series partial sum exceeded 1e12 times the kernel bound (q, rho outside validity?)");
    }
  }
  SeriesSum out;
  out.value = to_double(sum);
  out.abs_sum = to_double(abs_sum);
  out.terms = std::min(n, n_max);
  return out;
}

// Decimal digits needed so rounding, roughly abs_sum * sqrt(terms) * 10^-d,
// stays below 1e-13 |value|.
unsigned digits_needed(const SeriesSum& s) {
  const double mag = std::max(std::abs(s.value), s.abs_sum * 1e-300);
  const double ratio = s.abs_sum * std::sqrt(static_cast<double>(s.terms + 1)) / mag;
  return static_cast<unsigned>(std::ceil(13.0 + std::log10(std::max(ratio, 1.0))));
}

double mehler_gaussian(double rho, double x, double y) {
  const double om = 1.0 - rho * rho;
  return std::exp(-rho * (rho * (x * x + y * y) - 2.0 * x * y) / (2.0 * om)) / std::sqrt(om);
}

double angle_of(double q, double x) {
  const double u = x * std::sqrt(1.0 - q) / 2.0;
  if (std::abs(u) > 1.0 + kClampSlack) {
    throw DomainError("point " + std::to_string(x) + " lies outside the support");
  }
  return std::acos(std::clamp(u, -1.0, 1.0));
}

}  // namespace

std::string_view to_string(KernelMethod m) {
  switch (m) {
    case KernelMethod::Series: return "series";
    case KernelMethod::Product: return "product";
    case KernelMethod::CrossCheck: return "crosscheck";
  }
  return "product";
}

KernelMethod parse_kernel_method(std::string_view name) {
  if (name == "series") return KernelMethod::Series;
  if (name == "product") return KernelMethod::Product;
  if (name == "crosscheck") return KernelMethod::CrossCheck;
  throw DomainError("unknown kernel method '" + std::string(name) +
                    "' (expected series, product or crosscheck)");
}

double kernel_product_angles(double q, double rho, double theta_x, double theta_y) {
  if (rho == 0.0) return 1.0;
  const double sp = std::sin(0.5 * (theta_x + theta_y));
  const double sm = std::sin(0.5 * (theta_x - theta_y));
  const double sp2 = sp * sp, sm2 = sm * sm;
  const double r2 = rho * rho;
  double prod = 1.0, p = 1.0;
  for (std::size_t k = 0;; ++k) {
    const double rp = rho * p;
    const double om = 1.0 - rp;
    // 1 + rho^2 q^2k - 2 rho q^k cos(a) == (1 - rho q^k)^2 + 4 rho q^k sin^2(a/2)
    const double d1 = om * om + 4.0 * rp * sp2;
    const double d2 = om * om + 4.0 * rp * sm2;
    prod *= (1.0 - r2 * p) / (d1 * d2);
    p *= q;
    if (std::abs(p) < 1e-16 || k + 1 >= 2048) break;
  }
  return prod;
}

double kernel_product(double q, double rho, double x, double y) {
  if (!(std::abs(rho) < 1.0)) throw DomainError("kernel requires |rho| < 1");
  switch (measure_kind(q)) {
    case MeasureKind::TwoPoint: return 1.0 + rho * x * y;
    case MeasureKind::Gaussian: return mehler_gaussian(rho, x, y);
    case MeasureKind::QNormal: break;
  }
  return kernel_product_angles(q, rho, angle_of(q, x), angle_of(q, y));
}

double kernel_product(const ModelParams& p, double x, double y) {
  return kernel_product(p.q, p.rho, x, y);
}

SeriesSum kernel_series(double q, double rho, double x, double y, std::size_t n_max) {
  if (!(std::abs(rho) < 1.0)) throw DomainError("kernel requires |rho| < 1");
  const double qe = effective_q(q);
  SeriesSum s = sum_series<double>(qe, rho, x, y, n_max);
  s.digits = 16;
  unsigned want = digits_needed(s);
  for (int round = 0; round < 6 && want > s.digits; ++round) {
    const unsigned digits = std::min(2000u, std::max(want + 10, s.digits + 16));
    PrecisionGuard guard(digits);
    s = sum_series<mpfr_float>(qe, rho, x, y, n_max);
    s.digits = digits;
    want = digits_needed(s);
  }
  return s;
}

SeriesSum kernel_series(const ModelParams& p, double x, double y, std::size_t n_max) {
  return kernel_series(p.q, p.rho, x, y, n_max);
}

TransitionKernel::TransitionKernel(double q, double rho, KernelMethod mode,
                                   std::shared_ptr<const Measure> measure)
    : q_(q), rho_(rho), mode_(mode), measure_(std::move(measure)) {
  if (!(std::abs(rho) < 1.0)) throw DomainError("kernel requires |rho| < 1");
  if (!measure_) {
    measure_ = std::make_shared<const Measure>(q);
  } else if (measure_->q() != q) {
    throw DomainError("measure q does not match kernel q");
  }
  build_envelope();
}

TransitionKernel::TransitionKernel(const ModelParams& p, KernelMethod mode)
    : TransitionKernel(p.q, p.rho, mode) {}

void TransitionKernel::build_envelope() {
  const double qe = effective_q(q_);
  std::vector<double> grid(kEnvelopeGrid);
  const double half = kind() == MeasureKind::Gaussian ? 6.0
                      : kind() == MeasureKind::TwoPoint ? 1.0
                                                        : measure_->support_halfwidth();
  for (std::size_t i = 0; i < kEnvelopeGrid; ++i) {
    grid[i] = half * std::cos(std::numbers::pi * static_cast<double>(i) / (kEnvelopeGrid - 1));
  }
  if (kind() == MeasureKind::TwoPoint) {
    grid = {-1.0, 1.0};
  }
  const PolyFamily fam(qe, Normalization::Orthonormal, kEnvelopeCap);
  envelope_.assign(kEnvelopeCap + 1, 0.0);
  std::vector<double> p0(grid.size(), 0.0), p1(grid.size(), 1.0);
  envelope_[0] = 1.0;
  for (std::size_t n = 0; n < kEnvelopeCap; ++n) {
    double m = 0.0;
    const double bn = fam.b(n), bn1 = fam.b(n + 1);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double nx = bn1 == 0.0 ? 0.0 : (grid[i] * p1[i] - bn * p0[i]) / bn1;
      p0[i] = p1[i];
      p1[i] = nx;
      m = std::max(m, std::abs(nx));
    }
    envelope_[n + 1] = std::max(envelope_[n], m);
    // once the family has vanished (q = -1) the envelope stays flat; use the
    // raw sup so the series is seen to terminate
    if (bn1 == 0.0 || m == 0.0) envelope_[n + 1] = m;
  }
  const double ar = std::abs(rho_);
  // tail_[n] = sum_{m>n} |rho|^m M_m^2, geometric extrapolation past the cap
  tail_.assign(kEnvelopeCap + 1, 0.0);
  if (ar > 0.0) {
    const double la = std::log(ar);
    const double mc = envelope_[kEnvelopeCap];
    double acc = std::exp(static_cast<double>(kEnvelopeCap + 1) * la) * mc * mc / (1.0 - ar);
    for (std::size_t m = kEnvelopeCap; m > 0; --m) {
      tail_[m] = acc;
      acc += std::exp(static_cast<double>(m) * la) * envelope_[m] * envelope_[m];
    }
    tail_[0] = acc;
  }
  truncation_ = kEnvelopeCap;
  double rn = 1.0;
  for (std::size_t n = 1; n <= kEnvelopeCap; ++n) {
    rn *= ar;
    if (rn * envelope_[n] * envelope_[n] < 1e-10) {
      truncation_ = n;
      break;
    }
  }
}

double TransitionKernel::envelope(std::size_t n) const {
  return envelope_.at(std::min(n, kEnvelopeCap));
}

double TransitionKernel::tail_bound(std::size_t n) const {
  return tail_.at(std::min(n, kEnvelopeCap));
}

void TransitionKernel::check_point(double x) const {
  if (kind() == MeasureKind::QNormal && std::abs(x) > measure_->support_halfwidth() * (1.0 + kClampSlack)) {
    throw DomainError("point " + std::to_string(x) + " lies outside the support");
  }
}

double TransitionKernel::operator()(double x, double y) const {
  if (mode_ == KernelMethod::Series) return series(x, y).value;
  return product(x, y);
}

double TransitionKernel::product(double x, double y) const {
  check_point(x);
  check_point(y);
  return kernel_product(q_, rho_, x, y);
}

SeriesSum TransitionKernel::series(double x, double y) const {
  check_point(x);
  check_point(y);
  std::size_t n = truncation_;
  SeriesSum s = kernel_series(q_, rho_, x, y, n);
  for (int round = 0; round < 8; ++round) {
    const double goal = kSeriesRelTol * std::abs(s.value);
    if (tail_bound(n) <= goal || n >= kEnvelopeCap) break;
    // smallest degree whose tail meets half the goal, searched upward
    std::size_t next = n + 1;
    while (next < kEnvelopeCap && tail_bound(next) > 0.5 * goal) {
      next += std::max<std::size_t>(1, next / 16);
    }
    n = std::min(next, kEnvelopeCap);
    s = kernel_series(q_, rho_, x, y, n);
  }
  return s;
}

KernelEvaluation TransitionKernel::evaluate(double x, double y, KernelMethod method) const {
  KernelEvaluation ev;
  ev.method = method;
  switch (method) {
    case KernelMethod::Product:
      ev.value = product(x, y);
      ev.truncation = kind() == MeasureKind::QNormal ? std::max<std::size_t>(1, measure_->product_truncation() + 1) : 0;
      ev.residual = 0.0;
      break;
    case KernelMethod::Series: {
      const SeriesSum s = series(x, y);
      ev.value = s.value;
      ev.truncation = s.terms;
      ev.residual = tail_bound(s.terms);
      break;
    }
    case KernelMethod::CrossCheck: {
      const SeriesSum s = series(x, y);
      ev.value = product(x, y);
      ev.truncation = s.terms;
      ev.residual = std::abs(s.value - ev.value) / std::abs(ev.value);
      break;
    }
  }
  return ev;
}

double TransitionKernel::transition_density(double x, double y) const {
  switch (kind()) {
    case MeasureKind::TwoPoint:
      return (y == 1.0 || y == -1.0) ? 0.5 * (1.0 + rho_ * x * y) : 0.0;
    case MeasureKind::Gaussian:
      return (*this)(x, y) * measure_->density(y);
    case MeasureKind::QNormal:
      break;
  }
  if (std::abs(y) >= measure_->support_halfwidth()) return 0.0;
  return (*this)(x, y) * measure_->density(y);
}

std::vector<double> support_grid(const Measure& m, std::size_t n) {
  if (m.kind() == MeasureKind::TwoPoint) return {-1.0, 1.0};
  const double half = m.kind() == MeasureKind::Gaussian ? 4.0 : m.support_halfwidth();
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = -half * std::cos(std::numbers::pi * (static_cast<double>(i) + 0.5) / static_cast<double>(n));
  }
  return g;
}

namespace {

// K(x_i, z_j) for grid x and quadrature nodes z.
std::vector<double> kernel_matrix(const TransitionKernel& k, std::span<const double> xs,
                                  const QuadratureRule& rule) {
  std::vector<double> out(xs.size() * rule.nodes.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      out[i * rule.nodes.size() + j] = k(xs[i], rule.nodes[j]);
    }
  }
  return out;
}

}  // namespace

double check_eigenfunction(const TransitionKernel& kernel, std::size_t n,
                           std::span<const double> grid) {
  const double qe = effective_q(kernel.q());
  const std::size_t order = kernel.truncation_degree() + n + 8;
  const QuadratureRule rule = build_quadrature(qe, order);
  const PolyFamily fam(qe, Normalization::Orthonormal, std::max<std::size_t>(n, 1));
  std::vector<double> qn(rule.nodes.size());
  for (std::size_t j = 0; j < rule.nodes.size(); ++j) qn[j] = fam.eval(n, rule.nodes[j]);
  const double rn = std::pow(kernel.rho(), static_cast<double>(n));
  double worst = 0.0;
  for (double x : grid) {
    double s = 0.0;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) s += rule.weights[j] * qn[j] * kernel(x, rule.nodes[j]);
    worst = std::max(worst, std::abs(s - rn * fam.eval(n, x)));
  }
  return worst;
}

double check_row_sum(const TransitionKernel& kernel, std::span<const double> grid) {
  const QuadratureRule rule = build_quadrature(effective_q(kernel.q()), kernel.truncation_degree() + 8);
  double worst = 0.0;
  for (double x : grid) {
    double s = 0.0;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) s += rule.weights[j] * kernel(x, rule.nodes[j]);
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

double check_chapman_kolmogorov(const TransitionKernel& k_rho, const TransitionKernel& k_rho2,
                                std::span<const double> grid) {
  if (k_rho.q() != k_rho2.q()) throw DomainError("Chapman-Kolmogorov needs kernels with equal q");
  const std::size_t order = std::max(k_rho.truncation_degree(), k_rho2.truncation_degree()) + 8;
  const QuadratureRule rule = build_quadrature(effective_q(k_rho.q()), order);
  const std::vector<double> m = kernel_matrix(k_rho, grid, rule);
  const std::size_t nz = rule.nodes.size();
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t k = 0; k < grid.size(); ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < nz; ++j) s += rule.weights[j] * m[i * nz + j] * m[k * nz + j];
      const double target = k_rho2(grid[i], grid[k]);
      worst = std::max(worst, std::abs(s - target) / std::max(1.0, std::abs(target)));
    }
  }
  return worst;
}

double check_chapman_kolmogorov(double q, double rho, std::span<const double> grid) {
  const TransitionKernel k1(q, rho);
  const TransitionKernel k2(q, rho * rho, KernelMethod::Product, k1.measure_ptr());
  return check_chapman_kolmogorov(k1, k2, grid);
}

}  // namespace qfield

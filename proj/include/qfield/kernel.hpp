#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "qfield/measure.hpp"
#include "qfield/params.hpp"

namespace qfield {

enum class KernelMethod { Series, Product, CrossCheck };

std::string_view to_string(KernelMethod m);
KernelMethod parse_kernel_method(std::string_view name);

// Mehler-type kernel K(x,y) = sum_n rho^n Q_n(x) Q_n(y) over the orthonormal
// q-Hermite polynomials, summed in closed form:
//   q in (-1,1): prod_{k>=0} (1-rho^2 q^k) /
//                [(1+rho^2 q^2k - 2 rho q^k cos(tx+ty))(1+rho^2 q^2k - 2 rho q^k cos(tx-ty))]
//                with x = 2 cos(tx)/sqrt(1-q)
//   q = 1:       exp(-rho (rho(x^2+y^2) - 2xy) / (2(1-rho^2))) / sqrt(1-rho^2)
//   q = -1:      1 + rho x y
// The endpoint branches follow measure_kind(q).
double kernel_product(double q, double rho, double x, double y);
double kernel_product(const ModelParams& p, double x, double y);

// Same product in angle coordinates (q-normal branch only).
double kernel_product_angles(double q, double rho, double theta_x, double theta_y);

struct SeriesSum {
  double value = 0.0;
  std::size_t terms = 0;     // highest degree summed
  double abs_sum = 0.0;      // sum of |terms|, for the cancellation ratio
  unsigned digits = 16;      // decimal working precision that was needed
};

// Partial sum through degree n_max. Starts in double; when the cancellation
// ratio abs_sum/|value| makes double unreliable the sum is recomputed in MPFR
// at a precision large enough to resolve it. Throws NumericalError when a
// partial sum exceeds 1e12 times the a priori bound on |K| at (q, rho).
SeriesSum kernel_series(double q, double rho, double x, double y, std::size_t n_max);
SeriesSum kernel_series(const ModelParams& p, double x, double y, std::size_t n_max);

struct KernelEvaluation {
  double value = 0.0;
  KernelMethod method = KernelMethod::Product;
  std::size_t truncation = 0;
  double residual = 0.0;  // Series: tail bound; Product: 0; CrossCheck: |series-product|/|product|
};

// Transition kernel of the stationary chain: P_x(dy) = K(x,y) mu(dy).
//
// Holds the stationary measure and per-degree envelopes M_n = max_{k<=n} sup
// |Q_k| over a 512-point support grid. The series truncation degree is the
// smallest N with |rho|^N M_N^2 < 1e-10.
class TransitionKernel {
 public:
  static constexpr std::size_t kEnvelopeGrid = 512;
  static constexpr std::size_t kEnvelopeCap = 4096;

  TransitionKernel(double q, double rho, KernelMethod mode = KernelMethod::Product,
                   std::shared_ptr<const Measure> measure = nullptr);
  explicit TransitionKernel(const ModelParams& p, KernelMethod mode = KernelMethod::Product);

  double q() const { return q_; }
  double rho() const { return rho_; }
  MeasureKind kind() const { return measure_->kind(); }
  KernelMethod mode() const { return mode_; }
  const Measure& measure() const { return *measure_; }
  const std::shared_ptr<const Measure>& measure_ptr() const { return measure_; }

  std::size_t truncation_degree() const { return truncation_; }
  double envelope(std::size_t n) const;
  // sum_{m>n} |rho|^m M_m^2, extrapolated geometrically past the envelope cap.
  double tail_bound(std::size_t n) const;

  // Value in the configured mode (CrossCheck returns the product value).
  double operator()(double x, double y) const;
  double product(double x, double y) const;
  // Series with relative truncation: stops once tail_bound(n) <= 1e-13 |S_n|.
  SeriesSum series(double x, double y) const;
  KernelEvaluation evaluate(double x, double y, KernelMethod method) const;

  // K(x,y) f(y). On the two-point branch this is the transition mass
  // (1+rho x y)/2 at y = +-1.
  double transition_density(double x, double y) const;

 private:
  void build_envelope();
  void check_point(double x) const;

  double q_;
  double rho_;
  KernelMethod mode_;
  std::shared_ptr<const Measure> measure_;
  std::vector<double> envelope_;
  std::vector<double> tail_;
  std::size_t truncation_ = 0;
};

// Nodes strictly inside the support (Chebyshev points of the first kind
// scaled to the halfwidth); [-4,4] for the Gaussian branch and {-1,1} for the
// two-point branch.
std::vector<double> support_grid(const Measure& m, std::size_t n);

// max_x |int Q_n(y) K(x,y) mu(dy) - rho^n Q_n(x)| over the grid, orthonormal
// Q_n, Gauss rule of order truncation_degree + n + 8.
double check_eigenfunction(const TransitionKernel& kernel, std::size_t n,
                           std::span<const double> grid);

// max_{x,y} |int K_rho(x,z) K_rho(z,y) mu(dz) - K_{rho^2}(x,y)| over grid x grid,
// divided by max(1, K_{rho^2}(x,y)): near the support ends at q close to 1 the
// kernel reaches 1e15 and beyond, where only relative accuracy is meaningful.
double check_chapman_kolmogorov(const TransitionKernel& k_rho, const TransitionKernel& k_rho2,
                                std::span<const double> grid);
double check_chapman_kolmogorov(double q, double rho, std::span<const double> grid);

// max_x |int K(x,y) mu(dy) - 1| over the grid.
double check_row_sum(const TransitionKernel& kernel, std::span<const double> grid);

}  // namespace qfield

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "qfield/error.hpp"
#include "qfield/kernel.hpp"
#include "qfield/rng.hpp"

using namespace qfield;
using doctest::Approx;

namespace {

const double kQ[] = {-0.9, -0.5, 0.0, 0.5, 0.9};
const double kRho[] = {-0.9, -0.6, -0.3, 0.3, 0.6, 0.9};

// Poisson kernel of the Chebyshev-U family by direct summation.
double chebyshev_poisson(double rho, double tx, double ty, int terms) {
  double s = 0.0, r = 1.0;
  for (int n = 0; n < terms; ++n) {
    s += r * std::sin((n + 1) * tx) / std::sin(tx) * std::sin((n + 1) * ty) / std::sin(ty);
    r *= rho;
  }
  return s;
}

}  // namespace

TEST_CASE("trivial kernels") {
  CHECK(kernel_product(0.5, 0.0, 0.3, -1.2) == 1.0);
  CHECK(kernel_series(0.5, 0.0, 0.3, -1.2, 40).value == 1.0);
  for (double rho : {-0.7, 0.4}) {
    for (double x : {-1.0, 1.0}) {
      for (double y : {-1.0, 1.0}) {
        CHECK(kernel_product(-1.0, rho, x, y) == 1.0 + rho * x * y);
        CHECK(kernel_series(-1.0, rho, x, y, 50).value == Approx(1.0 + rho * x * y).epsilon(1e-15));
      }
    }
  }
}

TEST_CASE("q = 0 against the Chebyshev Poisson kernel") {
  const double p = kernel_product(0.0, 0.5, 0.0, 0.0);
  const double t = std::numbers::pi / 2;
  CHECK(p == Approx(chebyshev_poisson(0.5, t, t, 200)).epsilon(1e-13));
  CHECK(kernel_series(0.0, 0.5, 0.0, 0.0, 200).value == Approx(p).epsilon(1e-13));
  // closed form of the single factor at theta_x = theta_y = pi/2
  CHECK(p == Approx((1 - 0.25) / (1.5 * 1.5 * 0.5 * 0.5)).epsilon(1e-13));
  const double tx = 0.7, ty = 2.1;
  CHECK(kernel_product(0.0, -0.6, 2 * std::cos(tx), 2 * std::cos(ty)) ==
        Approx(chebyshev_poisson(-0.6, tx, ty, 200)).epsilon(1e-12));
}

TEST_CASE("Gaussian branch is the Mehler formula") {
  const double rho = 0.6, x = 0.4, y = -1.1;
  const double m = std::exp(-rho * (rho * (x * x + y * y) - 2 * x * y) / (2 * (1 - rho * rho))) /
                   std::sqrt(1 - rho * rho);
  CHECK(kernel_product(1.0, rho, x, y) == Approx(m).epsilon(1e-15));
  const TransitionKernel k(1.0, rho);
  CHECK(k.series(x, y).value == Approx(m).epsilon(1e-10));
  // transition density is N(rho x, 1 - rho^2)
  const double v = 1 - rho * rho, z = y - rho * x;
  CHECK(k.transition_density(x, y) ==
        Approx(std::exp(-z * z / (2 * v)) / std::sqrt(2 * std::numbers::pi * v)).epsilon(1e-13));
}

TEST_CASE("series and product agree") {
  const TransitionKernel k(0.5, 0.6, KernelMethod::CrossCheck);
  const KernelEvaluation e = k.evaluate(0.3, -0.7, KernelMethod::CrossCheck);
  CHECK(e.residual < 1e-8);
  CHECK(k.series(0.3, -0.7).value == Approx(k.product(0.3, -0.7)).epsilon(1e-8));
  // second entry point of the product with explicit parameters
  CHECK(kernel_product(params_from_q(0.6, 0.5), 0.3, -0.7) == k.product(0.3, -0.7));
  for (double q : {-0.5, 0.5}) {
    for (double rho : {-0.6, 0.3}) {
      const TransitionKernel t(q, rho);
      for (double x : support_grid(t.measure(), 8)) {
        for (double y : support_grid(t.measure(), 8)) {
          const double s = t.series(x, y).value, p = t.product(x, y);
          CHECK(std::abs(s - p) <= 1e-8 * p);
          CHECK(std::abs(t.product(x, y) - t.product(y, x)) < 1e-12 * p);
          CHECK(std::abs(s - t.series(y, x).value) < 1e-12 * std::max(1.0, p));
        }
      }
    }
  }
}

TEST_CASE("positivity at random points") {
  Rng rng(5);
  for (double q : kQ) {
    const double h = 2 / std::sqrt(1 - q);
    for (double rho : kRho) {
      for (int i = 0; i < 10000; ++i) {
        const double x = h * (2 * rng.uniform() - 1), y = h * (2 * rng.uniform() - 1);
        CHECK_MESSAGE(kernel_product(q, rho, x, y) > 0.0, "q=" << q << " rho=" << rho);
      }
    }
  }
}

TEST_CASE("truncation degree and tail bound") {
  const TransitionKernel k(0.5, 0.6);
  const std::size_t n = k.truncation_degree();
  const double e = k.envelope(n);
  CHECK(std::pow(0.6, n) * e * e < 1e-10);
  CHECK(std::pow(0.6, n - 1) * k.envelope(n - 1) * k.envelope(n - 1) >= 1e-10);
  CHECK(k.tail_bound(n) < k.tail_bound(n - 1));
  CHECK(k.envelope(0) == 1.0);
  for (std::size_t m = 1; m < 50; ++m) CHECK(k.envelope(m) >= k.envelope(m - 1));
  const TransitionKernel two(-1.0, 0.5);
  CHECK(two.truncation_degree() <= 2);
}

TEST_CASE("row sums and transition densities") {
  for (double q : {-0.5, 0.0, 0.9}) {
    const TransitionKernel k(q, 0.6);
    const auto grid = support_grid(k.measure(), 16);
    CHECK(check_row_sum(k, grid) < 1e-8);
  }
  const TransitionKernel two(-1.0, 0.5);
  CHECK(two.transition_density(1.0, 1.0) == 0.75);
  CHECK(two.transition_density(1.0, -1.0) == 0.25);
  CHECK(two.transition_density(-1.0, -1.0) == 0.75);
  const TransitionKernel flat(0.3, 0.0);
  CHECK(flat.transition_density(0.4, -0.9) == Approx(flat.measure().density(-0.9)).epsilon(1e-15));
}

TEST_CASE("eigenfunction identity") {
  const TransitionKernel k(0.5, 0.5);
  const auto grid = support_grid(k.measure(), 16);
  CHECK(check_eigenfunction(k, 0, grid) < 1e-12);
  CHECK(check_eigenfunction(k, 1, grid) < 1e-8);
  const TransitionKernel k2(0.3, 0.7);
  CHECK(check_eigenfunction(k2, 5, support_grid(k2.measure(), 16)) < 1e-6);
  const TransitionKernel g(1.0, 0.6);
  CHECK(check_eigenfunction(g, 3, support_grid(g.measure(), 9)) < 1e-8);
}

TEST_CASE("Chapman-Kolmogorov") {
  const TransitionKernel z(0.5, 0.0);
  CHECK(check_chapman_kolmogorov(z, z, support_grid(z.measure(), 8)) < 1e-12);
  // two-state: matrix [[1+r, 1-r],[1-r, 1+r]]/2 squared has off-diagonal (1-r^2)/2
  const TransitionKernel t1(-1.0, 0.4), t2(-1.0, 0.16);
  const auto g = support_grid(t1.measure(), 2);
  CHECK(check_chapman_kolmogorov(t1, t2, g) < 1e-15);
  CHECK(0.5 * t2(1.0, -1.0) == Approx((1 - 0.16) / 2).epsilon(1e-15));
  const TransitionKernel a(0.5, 0.6);
  const TransitionKernel b(0.5, 0.36, KernelMethod::Product, a.measure_ptr());
  CHECK(check_chapman_kolmogorov(a, b, support_grid(a.measure(), 12)) < 1e-6);
  // composing with a kernel at the wrong rho is detected
  const TransitionKernel wrong(0.5, 0.5, KernelMethod::Product, a.measure_ptr());
  CHECK(check_chapman_kolmogorov(a, wrong, support_grid(a.measure(), 12)) > 1e-3);
}

TEST_CASE("kernel errors") {
  CHECK_THROWS_AS(kernel_product(0.5, 1.0, 0.0, 0.0), DomainError);
  CHECK_THROWS_AS(TransitionKernel(0.5, 0.5).product(3.0, 0.0), DomainError);
  CHECK_THROWS_AS(parse_kernel_method("fourier"), DomainError);
  CHECK(parse_kernel_method("crosscheck") == KernelMethod::CrossCheck);
  CHECK(to_string(KernelMethod::Series) == "series");
  // support endpoints are accepted despite rounding in arccos
  const double h = 2 / std::sqrt(0.5);
  CHECK(std::isfinite(kernel_product(0.5, 0.3, h, -h)));
}

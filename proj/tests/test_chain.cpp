#include <cmath>
#include <numbers>

#include "doctest.h"
#include "qfield/chain.hpp"
#include "qfield/error.hpp"
#include "qfield/measure.hpp"

using namespace qfield;
using doctest::Approx;

namespace {

double lag_corr(const std::vector<double>& x, std::size_t k) {
  double s = 0.0;
  for (std::size_t i = 0; i + k < x.size(); ++i) s += x[i] * x[i + k];
  return s / static_cast<double>(x.size() - k);
}

}  // namespace

TEST_CASE("two-state chain transition frequency") {
  const ChainRun run = simulate_chain(params_from_q(0.5, -1.0), 1000000, 3);
  CHECK(run.sampler_kind == SamplerKind::TwoState);
  double from_plus = 0, stay_plus = 0;
  for (std::size_t i = 0; i + 1 < run.values.size(); ++i) {
    if (run.values[i] == 1.0) {
      ++from_plus;
      stay_plus += run.values[i + 1] == 1.0;
    }
    CHECK((run.values[i] == 1.0 || run.values[i] == -1.0));
  }
  CHECK(std::abs(stay_plus / from_plus - 0.75) < 0.002);
}

TEST_CASE("Gaussian chain correlations") {
  const ChainRun run = simulate_chain(derive_params(0.6, 2.0), 1000000, 4);
  CHECK(run.sampler_kind == SamplerKind::Gaussian);
  CHECK(std::abs(lag_corr(run.values, 2) - 0.36) < 0.01);
}

TEST_CASE("semicircle chain moments and support") {
  const ChainRun run = simulate_chain(params_from_q(0.5, 0.0), 1000000, 5);
  CHECK(run.sampler_kind == SamplerKind::RejectionKernel);
  double m1 = 0, m2 = 0, m4 = 0, mx = 0;
  for (double v : run.values) {
    m1 += v;
    m2 += v * v;
    m4 += v * v * v * v;
    mx = std::max(mx, std::abs(v));
  }
  CHECK(std::abs(m1 / 1e6) < 0.01);
  CHECK(std::abs(m2 / 1e6 - 1.0) < 0.01);
  CHECK(std::abs(m4 / 1e6 - 2.0) < 0.02);
  CHECK(mx <= 2.0);
  CHECK(run.bound_rebuilds == 0);
  CHECK(run.proposals >= run.length - 1);
}

TEST_CASE("values stay inside the support") {
  for (double q : {-0.9, 0.5, 0.9}) {
    const ModelParams p = params_from_q(-0.7, q);
    const ChainRun run = simulate_chain(p, 20000, 6);
    for (double v : run.values) CHECK(std::abs(v) <= p.support_halfwidth + 1e-9);
  }
}

TEST_CASE("determinism") {
  const ModelParams p = params_from_q(0.5, 0.5);
  CHECK(simulate_chain(p, 5000, 9).values == simulate_chain(p, 5000, 9).values);
  CHECK(simulate_chain(p, 5000, 9).values != simulate_chain(p, 5000, 10).values);
  CHECK(simulate_counterexample(0.6, 0.8, 500, 2).values ==
        simulate_counterexample(0.6, 0.8, 500, 2).values);
}

TEST_CASE("kernel sup bound dominates the kernel") {
  const double q = 0.5, rho = -0.6;
  const KernelSupBound b(q, rho, 64, 256);
  for (int i = 0; i <= 200; ++i) {
    const double tx = std::numbers::pi * i / 200.0;
    for (int j = 0; j <= 200; ++j) {
      const double ty = std::numbers::pi * j / 200.0;
      CHECK(kernel_product_angles(q, rho, tx, ty) <= b(tx));
    }
  }
  CHECK(b.refined().cells() == 128);
}

TEST_CASE("chain argument checks") {
  CHECK_THROWS_AS(simulate_chain(params_from_q(0.5, 0.5), 0, 1), DomainError);
  CHECK_THROWS_AS(simulate_counterexample(0.0, 0.5, 10, 1), DomainError);
  CHECK_THROWS_AS(simulate_counterexample(1.0, 0.5, 10, 1), DomainError);
  CHECK_THROWS_AS(simulate_counterexample(-1.0, 0.5, 10, 1), DomainError);
  CHECK_THROWS_AS(simulate_counterexample(0.5, 1.5, 10, 1), DomainError);
  CHECK(to_string(SamplerKind::RejectionKernel) == "rejection_kernel");
}

TEST_CASE("counterexample construction") {
  CHECK(counterexample_r(0.6) == Approx(1.0 / 3).epsilon(1e-15));
  const double r = counterexample_r(-0.8);
  CHECK(r / (1 + r * r) == Approx(-0.4).epsilon(1e-15));
  const CounterexampleRun run = simulate_counterexample(0.6, 0.8, 1000, 11);
  CHECK(run.a * run.a + run.b * run.b == Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(run.xi_pair[0]) == 1);
  CHECK(std::abs(run.xi_pair[1]) == 1);
  // pure periodic part when a = 1
  const CounterexampleRun xi = simulate_counterexample(0.6, 1.0, 100, 12);
  for (std::size_t k = 0; k + 2 < xi.values.size(); ++k) CHECK(xi.values[k + 2] == xi.values[k]);
  // pure Gaussian AR(1) when a = 0
  const CounterexampleRun g = simulate_counterexample(0.6, 0.0, 400000, 13);
  CHECK(std::abs(lag_corr(g.values, 1) - 1.0 / 3) < 0.01);
  CHECK(std::abs(lag_corr(g.values, 4) - std::pow(1.0 / 3, 4)) < 0.01);
  CHECK(counterexample_correlation(0.6, 0.0, 3) == Approx(1.0 / 27).epsilon(1e-14));
}

TEST_CASE("xi pair law") {
  const auto runs = simulate_counterexample_replications(0.6, 1.0, 2, 20000, 14);
  double same = 0, plus = 0;
  for (const auto& r : runs) {
    same += r.xi_pair[0] == r.xi_pair[1];
    plus += r.xi_pair[0] == 1;
  }
  CHECK(std::abs(same / 20000 - 0.8) < 0.01);
  CHECK(std::abs(plus / 20000 - 0.5) < 0.01);
}

TEST_CASE("counterexample long-lag correlations do not vanish") {
  const auto runs = simulate_counterexample_replications(0.6, 0.8, 100000, 64, 15);
  double s = 0.0;
  for (const auto& r : runs) s += lag_corr(r.values, 20);
  CHECK(std::abs(s / 64 - 0.64) < 0.01);
}

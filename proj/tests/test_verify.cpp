#include <cmath>

#include "doctest.h"
#include "qfield/error.hpp"
#include "qfield/kernel.hpp"
#include "qfield/verify.hpp"

using namespace qfield;
using doctest::Approx;

namespace {

bool all_pass(const std::vector<Residual>& r) {
  for (const auto& x : r) {
    if (!x.pass) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("dictionary") {
  const auto d = default_dictionary(0.5);
  CHECK(d.size() == 15);
  CHECK(d[0].name == "1");
  CHECK(d[4].g(2.0, 3.0) == 6.0);
  // Q1(u) Q2(v) = u (v^2 - 1)
  bool found = false;
  for (const auto& tf : d) {
    if (tf.name == "Q1(u)Q2(v)") {
      found = true;
      CHECK(tf.g(2.0, 3.0) == Approx(16.0));
    }
  }
  CHECK(found);
}

TEST_CASE("two-state identities hold exactly by enumeration") {
  const double rho = 0.5;
  const ModelParams p = params_from_q(rho, -1.0);
  const auto dict = default_dictionary(-1.0);
  auto trans = [rho](double x, double y) { return 0.5 * (1 + rho * x * y); };
  for (const auto& tf : dict) {
    double mean_res = 0.0, var_res = 0.0;
    for (double u : {-1.0, 1.0}) {
      for (double m : {-1.0, 1.0}) {
        for (double v : {-1.0, 1.0}) {
          const double pr = 0.5 * trans(u, m) * trans(m, v);
          mean_res += pr * (m - p.a * (u + v)) * tf.g(u, v);
          var_res += pr * (m * m - p.A * (u * u + v * v) - p.B * u * v - p.C) * tf.g(u, v);
        }
      }
    }
    CHECK_MESSAGE(std::abs(mean_res) < 1e-15, tf.name);
    CHECK_MESSAGE(std::abs(var_res) < 1e-15, tf.name);
  }
  const ChainRun run = simulate_chain(p, 200000, 21);
  CHECK(all_pass(check_conditional_mean(run, dict)));
  CHECK(all_pass(check_conditional_variance(run, dict)));
}

TEST_CASE("constant test function reduces to the coefficient identity") {
  for (double q : {-1.0, 0.0, 0.5, 1.0}) {
    const ModelParams p = params_from_q(0.5, q);
    CHECK(std::abs(1 - 2 * p.A - p.B * p.rho * p.rho - p.C) < 1e-15);
  }
}

TEST_CASE("conditional moments by kernel quadrature") {
  const double rho = 0.5;
  const TransitionKernel k(0.0, rho);
  const QuadratureRule r = build_quadrature(0.0, k.truncation_degree() + 8);
  for (double x : {-1.7, -0.2, 0.9}) {
    const double m1 = r.integrate([&](double y) { return y * k(x, y); });
    const double m2 = r.integrate([&](double y) { return y * y * k(x, y); });
    CHECK(m1 == Approx(rho * x).epsilon(1e-10));
    CHECK(m2 == Approx(rho * rho * x * x + 1 - rho * rho).epsilon(1e-10));
  }
}

TEST_CASE("full check families on a q-normal chain") {
  const ChainRun run = simulate_chain(params_from_q(0.5, 0.5), 300000, 22);
  const VerifyReport rep = verify_chain(run);
  CHECK(rep.correlations_pass());
  CHECK(rep.regression_pass());
  CHECK(rep.variance_pass());
  CHECK(rep.single_cond_pass());
  CHECK(rep.ks.pass_adjusted);
  CHECK(rep.support_ok);
  CHECK(rep.all_pass());
  CHECK(rep.correlation_residuals[0].empirical == 1.0);
  CHECK(rep.correlation_residuals[0].target == 1.0);
  CHECK(rep.n_samples == 300000);
  CHECK(rep.ks.n == 300000 - kKsDiscard);
  CHECK(rep.ks.threshold_adjusted > rep.ks.threshold_raw);
  CHECK(rep.reversibility.pairs_tested == 28);
  CHECK(rep.reversibility.max_abs_z < 6.0);
  CHECK(rep.binning.max_abs_deviation < 0.05);
  for (const auto& r : rep.regression_residuals) {
    CHECK(r.stderr_ > 0.0);
    CHECK(r.threshold == Approx(4 * r.stderr_ + 1e-3));
  }
}

TEST_CASE("Gaussian single conditioning") {
  const ChainRun run = simulate_chain(derive_params(0.7, 2.0), 200000, 23);
  const SingleConditioning s = check_single_conditioning(run);
  CHECK(all_pass(s.mean));
  CHECK(all_pass(s.second_moment));
  CHECK(s.mean.size() == 4);
}

TEST_CASE("negative control: swapped coefficients fail") {
  const ChainRun run = simulate_chain(params_from_q(0.5, 0.5), 200000, 24);
  CHECK(all_pass(check_conditional_variance(run, default_dictionary(0.5))));
  CHECK_FALSE(all_pass(corrupted_variance_check(run)));
}

TEST_CASE("KS statistic") {
  const Measure two(-1.0);
  const std::vector<double> s = {-1.0, 1.0, 1.0, 1.0};
  CHECK(ks_statistic(s, two) == Approx(0.25));
  const std::vector<double> even = {-1.0, 1.0, 1.0, -1.0};
  CHECK(ks_statistic(even, two) == 0.0);
  // power: a q = 0.5 chain is distinguishable from the semicircle
  const ChainRun run = simulate_chain(params_from_q(0.5, 0.5), 200000, 25);
  CHECK_FALSE(check_distribution(run, Measure(0.0)).pass_adjusted);
  CHECK(check_distribution(run, Measure(0.5)).pass_adjusted);
}

TEST_CASE("batch means") {
  CHECK(batch_length(0.5, 1000000) == 100);
  CHECK(batch_length(0.5, 5000) == 50);
  CHECK(batch_length(0.99, 1000000) == 5000);
  const std::vector<double> v(1000, 2.0);
  const MeanEstimate m = batch_mean(v, 10);
  CHECK(m.mean == 2.0);
  CHECK(m.stderr_ == 0.0);
}

TEST_CASE("length preconditions") {
  const std::vector<double> x(500, 0.1);
  CHECK_THROWS_AS(check_correlations(x, 0.5, 6), DomainError);
  CHECK_THROWS_AS(check_conditional_mean(x, 0.4, 0.5, default_dictionary(0.0)), DomainError);
  CHECK_THROWS_AS(check_distribution(x, Measure(0.0), 0.5), DomainError);
}

TEST_CASE("counterexample report") {
  const auto runs = simulate_counterexample_replications(0.6, 0.8, 50000, 32, 26);
  const CounterexampleReport rep = verify_counterexample(runs);
  CHECK(rep.alpha == 0.3);
  CHECK(rep.C == Approx(0.64 * 0.64 + 0.36 * 0.8).epsilon(1e-14));
  CHECK(rep.correlations_match());
  CHECK(rep.regression_pass());
  CHECK(rep.variance_pass());
  CHECK_FALSE(all_pass(rep.variance_residuals_stated_c));
  CHECK(rep.ks_rejects_family);
  CHECK(rep.min_ks_over_q > 0.02);
  // lag-4 correlation approaches a^2 + b^2 r^4, not rho^4
  CHECK(rep.even_lag_correlations[1].lag == 4);
  CHECK(std::abs(rep.even_lag_correlations[1].empirical - std::pow(0.6, 4)) > 0.4);
}

TEST_CASE("check_correlations rejects the counterexample target") {
  const auto run = simulate_counterexample(0.6, 0.8, 100000, 27);
  const auto c = check_correlations(run.values, 0.6, 4);
  CHECK_FALSE(c[4].pass);
}

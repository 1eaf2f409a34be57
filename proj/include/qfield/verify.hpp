#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qfield/chain.hpp"
#include "qfield/measure.hpp"
#include "qfield/params.hpp"

namespace qfield {

inline constexpr double kSigmaMultiplier = 4.0;
inline constexpr double kBiasFloor = 1e-3;
inline constexpr double kKsCoefficient = 1.63;  // 1% level
inline constexpr std::size_t kKsDiscard = 5000;

// pass iff |value| <= 4 stderr + 1e-3
struct Residual {
  std::string name;
  double value = 0.0;
  double stderr_ = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct CorrelationResidual {
  std::size_t lag = 0;
  double empirical = 0.0;
  double target = 0.0;
  double stderr_ = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct KsResult {
  double statistic = 0.0;
  std::size_t n = 0;
  double n_eff = 0.0;
  double threshold_raw = 0.0;
  double threshold_adjusted = 0.0;
  bool pass_raw = false;
  bool pass_adjusted = false;
};

// Named test function g(u, v) of the two neighbours.
struct TestFunction {
  std::string name;
  std::function<double(double, double)> g;
};

// {1, u, v, u^2, uv, v^2} and Q_i(u) Q_j(v) for 3 <= i+j <= 4, with monic
// q-Hermite Q at the given q (degree-2 products would repeat the quadratics).
std::vector<TestFunction> default_dictionary(double q);

// Batch length for batch-means standard errors: 50/(1-|rho|), capped at n/100.
std::size_t batch_length(double rho, std::size_t n);

// Mean of the series and its batch-means standard error.
struct MeanEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};
MeanEstimate batch_mean(std::span<const double> values, std::size_t batch);

Residual make_residual(std::string name, const MeanEstimate& m);

// Standardized autocorrelations at lags 0..k_max against rho^k. Requires
// length >= 100 k_max.
std::vector<CorrelationResidual> check_correlations(std::span<const double> x, double rho,
                                                    std::size_t k_max);
std::vector<CorrelationResidual> check_correlations(const ChainRun& run, std::size_t k_max);

// Averages of (X_k - a (X_{k-1}+X_{k+1})) g(X_{k-1}, X_{k+1}). Requires
// length >= 1e5.
std::vector<Residual> check_conditional_mean(std::span<const double> x, double a, double rho,
                                             const std::vector<TestFunction>& dict);
std::vector<Residual> check_conditional_mean(const ChainRun& run,
                                             const std::vector<TestFunction>& dict);

// Averages of (X_k^2 - A(X_{k-1}^2+X_{k+1}^2) - B X_{k-1} X_{k+1} - C) g(X_{k-1}, X_{k+1}).
std::vector<Residual> check_conditional_variance(std::span<const double> x, double A, double B,
                                                 double C, double rho,
                                                 const std::vector<TestFunction>& dict);
std::vector<Residual> check_conditional_variance(const ChainRun& run,
                                                 const std::vector<TestFunction>& dict);

// E[(X_{k+1} - rho X_k) h(X_k)] and E[(X_{k+1}^2 - rho^2 X_k^2 - (1-rho^2)) h(X_k)]
// for h in {1, x, x^2, Q_3}.
struct SingleConditioning {
  std::vector<Residual> mean;
  std::vector<Residual> second_moment;
};
SingleConditioning check_single_conditioning(const ChainRun& run);

// sup_x |F_n(x) - F(x)| using both F and its left limit, so atoms are handled.
double ks_statistic(std::span<const double> sample, const Measure& measure);
// Same on an ascending sample.
double ks_statistic_sorted(std::span<const double> sorted, const Measure& measure);

// KS against the measure after discarding the first 5000 steps. The adjusted
// threshold uses n_eff = n (1-|rho|)/(1+|rho|).
KsResult check_distribution(std::span<const double> x, const Measure& measure, double rho,
                            std::size_t discard = kKsDiscard);
KsResult check_distribution(const ChainRun& run, const Measure& measure);

// Largest |z| over symmetric cell pairs of the binned (X_n, X_{n+1}) counts,
// z = (n_ij - n_ji)/sqrt(n_ij + n_ji); bins are quantile cells of the measure.
struct ReversibilityResult {
  std::size_t bins = 0;
  std::size_t pairs_tested = 0;
  double max_abs_z = 0.0;
};
ReversibilityResult reversibility_test(std::span<const double> x, const Measure& measure,
                                       std::size_t bins = 8);

// Human-readable diagnostic: mean of X_k in quantile cells of (X_{k-1}, X_{k+1})
// minus a(u+v) at the cell averages; worst cell with at least min_count points.
struct BinningDiagnostic {
  std::size_t bins = 0;
  std::size_t cells_used = 0;
  double max_abs_deviation = 0.0;
};
BinningDiagnostic binning_diagnostic(std::span<const double> x, const Measure& measure, double a,
                                     std::size_t bins = 6, std::size_t min_count = 1000);

struct VerifyReport {
  ModelParams params;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  std::vector<CorrelationResidual> correlation_residuals;
  std::vector<Residual> regression_residuals;
  std::vector<Residual> variance_residuals;
  SingleConditioning single_cond_residuals;
  KsResult ks;
  ReversibilityResult reversibility;
  BinningDiagnostic binning;
  bool support_ok = true;
  double max_abs_value = 0.0;

  bool correlations_pass() const;
  bool regression_pass() const;
  bool variance_pass() const;
  bool single_cond_pass() const;
  bool all_pass() const;
};

inline constexpr std::size_t kDefaultMaxLag = 6;

VerifyReport verify_chain(const ChainRun& run, std::size_t k_max = kDefaultMaxLag);

// Same run checked against a deliberately corrupted coefficient set (A and B
// swapped in the quadratic form). Its variance family should fail.
std::vector<Residual> corrupted_variance_check(const ChainRun& run);

// Ensemble checks for the counterexample field. The xi pair is frozen within a
// replication, so each statistic is averaged per replication and the standard
// error is taken between replications.
struct CounterexampleReport {
  double rho = 0.0;
  double a = 0.0;
  double alpha = 0.0;   // rho/2
  double C = 0.0;       // constant used in the second-moment identity
  std::size_t reps = 0;
  std::size_t length = 0;
  std::vector<CorrelationResidual> even_lag_correlations;  // target a^2 + b^2 r^{2m}
  std::vector<Residual> regression_residuals;
  std::vector<Residual> variance_residuals;
  std::vector<Residual> variance_residuals_stated_c;  // same with C = 1 - rho^2
  double min_ks_over_q = 0.0;
  double argmin_q = 0.0;
  double ks_threshold = 0.0;
  bool ks_rejects_family = false;
  double correlation_tolerance = 0.01;

  bool correlations_match() const;
  bool regression_pass() const;
  bool variance_pass() const;
};

// Second-moment constant of the two-neighbour identity for Z = a xi + b gamma:
// a^2 (1-rho^2) + b^2 sqrt(1-rho^2).
double counterexample_constant(double rho, double a);

// q values the KS comparison sweeps: -1, -0.95, ..., 0.95, 1.
std::vector<double> ks_q_grid();

CounterexampleReport verify_counterexample(const std::vector<CounterexampleRun>& runs,
                                           std::size_t max_even_lag = 10);

}  // namespace qfield

#include "qfield/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qfield/error.hpp"
#include "qfield/qpoly.hpp"

namespace qfield {
namespace {

void require_length(std::size_t n, std::size_t need, const char* what) {
  if (n < need) {
    throw DomainError(std::string(what) + " requires at least " + std::to_string(need) +
                      " samples, got " + std::to_string(n));
  }
}

constexpr std::size_t kMinIdentityLength = 100000;

double threshold_for(double stderr_) { return kSigmaMultiplier * stderr_ + kBiasFloor; }

template <class F>
std::vector<double> series_of(std::size_t n, F&& f) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
  return out;
}

// Residual series e_k g(X_{k-1}, X_{k+1}) for k = 1..n-2.
template <class E>
std::vector<Residual> neighbour_residuals(std::span<const double> x, double rho,
                                          const std::vector<TestFunction>& dict, E&& e) {
  const std::size_t m = x.size() - 2;
  std::vector<double> ek(m);
  for (std::size_t k = 0; k < m; ++k) ek[k] = e(x[k], x[k + 1], x[k + 2]);
  const std::size_t batch = batch_length(rho, m);
  std::vector<Residual> out;
  out.reserve(dict.size());
  std::vector<double> s(m);
  for (const auto& tf : dict) {
    for (std::size_t k = 0; k < m; ++k) s[k] = ek[k] * tf.g(x[k], x[k + 2]);
    out.push_back(make_residual(tf.name, batch_mean(s, batch)));
  }
  return out;
}

bool all_of_pass(const std::vector<Residual>& r) {
  return std::all_of(r.begin(), r.end(), [](const Residual& x) { return x.pass; });
}

// Per-replication means of a residual series, combined across replications.
MeanEstimate between_replications(const std::vector<double>& rep_means) {
  const double n = static_cast<double>(rep_means.size());
  MeanEstimate m;
  m.mean = std::accumulate(rep_means.begin(), rep_means.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : rep_means) ss += (v - m.mean) * (v - m.mean);
  m.stderr_ = rep_means.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return m;
}

}  // namespace

std::vector<TestFunction> default_dictionary(double q) {
  std::vector<TestFunction> d;
  d.push_back({"1", [](double, double) { return 1.0; }});
  d.push_back({"u", [](double u, double) { return u; }});
  d.push_back({"v", [](double, double v) { return v; }});
  d.push_back({"u^2", [](double u, double) { return u * u; }});
  d.push_back({"uv", [](double u, double v) { return u * v; }});
  d.push_back({"v^2", [](double, double v) { return v * v; }});
  auto fam = std::make_shared<const PolyFamily>(effective_q(q), Normalization::Monic, 4);
  for (std::size_t total = 3; total <= 4; ++total) {
    for (std::size_t i = 0; i <= total; ++i) {
      const std::size_t j = total - i;
      d.push_back({"Q" + std::to_string(i) + "(u)Q" + std::to_string(j) + "(v)",
                   [fam, i, j](double u, double v) { return fam->eval(i, u) * fam->eval(j, v); }});
    }
  }
  return d;
}

std::size_t batch_length(double rho, std::size_t n) {
  const auto want = static_cast<std::size_t>(std::ceil(50.0 / (1.0 - std::abs(rho))));
  return std::max<std::size_t>(1, std::min(want, n / 100));
}

MeanEstimate batch_mean(std::span<const double> values, std::size_t batch) {
  const std::size_t n = values.size();
  if (n == 0) throw DomainError("batch_mean of an empty series");
  batch = std::max<std::size_t>(1, batch);
  MeanEstimate m;
  m.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  const std::size_t nb = n / batch;
  if (nb < 2) return m;
  std::vector<double> bm(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    double s = 0.0;
    for (std::size_t i = b * batch; i < (b + 1) * batch; ++i) s += values[i];
    bm[b] = s / static_cast<double>(batch);
  }
  const double mb = std::accumulate(bm.begin(), bm.end(), 0.0) / static_cast<double>(nb);
  double ss = 0.0;
  for (double v : bm) ss += (v - mb) * (v - mb);
  m.stderr_ = std::sqrt(ss / static_cast<double>(nb - 1) / static_cast<double>(nb));
  return m;
}

Residual make_residual(std::string name, const MeanEstimate& m) {
  Residual r;
  r.name = std::move(name);
  r.value = m.mean;
  r.stderr_ = m.stderr_;
  r.threshold = threshold_for(m.stderr_);
  r.pass = std::abs(r.value) <= r.threshold;
  return r;
}

std::vector<CorrelationResidual> check_correlations(std::span<const double> x, double rho,
                                                    std::size_t k_max) {
  require_length(x.size(), std::max<std::size_t>(100 * k_max, 2), "check_correlations");
  const std::size_t n = x.size();
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  if (!(var > 0.0)) throw NumericalError("constant series has no correlations");
  const double sd = std::sqrt(var);
  const std::vector<double> z = series_of(n, [&](std::size_t i) { return (x[i] - mean) / sd; });

  std::vector<CorrelationResidual> out;
  CorrelationResidual lag0;
  lag0.lag = 0;
  lag0.empirical = 1.0;
  lag0.target = 1.0;
  lag0.threshold = threshold_for(0.0);
  lag0.pass = true;
  out.push_back(lag0);
  double target = 1.0;
  for (std::size_t k = 1; k <= k_max; ++k) {
    target *= rho;
    const std::vector<double> prod = series_of(n - k, [&](std::size_t i) { return z[i] * z[i + k]; });
    const MeanEstimate m = batch_mean(prod, batch_length(rho, n - k));
    CorrelationResidual c;
    c.lag = k;
    c.empirical = m.mean;
    c.target = target;
    c.stderr_ = m.stderr_;
    c.threshold = kSigmaMultiplier * m.stderr_;
    c.pass = std::abs(c.empirical - c.target) <= c.threshold;
    out.push_back(c);
  }
  return out;
}

std::vector<CorrelationResidual> check_correlations(const ChainRun& run, std::size_t k_max) {
  return check_correlations(run.values, run.params.rho, k_max);
}

std::vector<Residual> check_conditional_mean(std::span<const double> x, double a, double rho,
                                             const std::vector<TestFunction>& dict) {
  require_length(x.size(), kMinIdentityLength, "check_conditional_mean");
  return neighbour_residuals(x, rho, dict,
                             [a](double u, double m, double v) { return m - a * (u + v); });
}

std::vector<Residual> check_conditional_mean(const ChainRun& run,
                                             const std::vector<TestFunction>& dict) {
  return check_conditional_mean(run.values, run.params.a, run.params.rho, dict);
}

std::vector<Residual> check_conditional_variance(std::span<const double> x, double A, double B,
                                                 double C, double rho,
                                                 const std::vector<TestFunction>& dict) {
  require_length(x.size(), kMinIdentityLength, "check_conditional_variance");
  return neighbour_residuals(x, rho, dict, [A, B, C](double u, double m, double v) {
    return m * m - A * (u * u + v * v) - B * u * v - C;
  });
}

std::vector<Residual> check_conditional_variance(const ChainRun& run,
                                                 const std::vector<TestFunction>& dict) {
  const ModelParams& p = run.params;
  return check_conditional_variance(run.values, p.A, p.B, p.C, p.rho, dict);
}

SingleConditioning check_single_conditioning(const ChainRun& run) {
  require_length(run.values.size(), kMinIdentityLength, "check_single_conditioning");
  const auto& x = run.values;
  const double rho = run.params.rho;
  const std::size_t m = x.size() - 1;
  const PolyFamily fam(effective_q(run.params.q), Normalization::Monic, 3);
  const std::vector<std::pair<std::string, std::function<double(double)>>> hs = {
      {"1", [](double) { return 1.0; }},
      {"x", [](double v) { return v; }},
      {"x^2", [](double v) { return v * v; }},
      {"Q3(x)", [&fam](double v) { return fam.eval(3, v); }},
  };
  const std::size_t batch = batch_length(rho, m);
  SingleConditioning out;
  std::vector<double> s(m);
  for (const auto& [name, h] : hs) {
    for (std::size_t k = 0; k < m; ++k) s[k] = (x[k + 1] - rho * x[k]) * h(x[k]);
    out.mean.push_back(make_residual(name, batch_mean(s, batch)));
    for (std::size_t k = 0; k < m; ++k) {
      s[k] = (x[k + 1] * x[k + 1] - rho * rho * x[k] * x[k] - (1.0 - rho * rho)) * h(x[k]);
    }
    out.second_moment.push_back(make_residual(name, batch_mean(s, batch)));
  }
  return out;
}

double ks_statistic(std::span<const double> sample, const Measure& measure) {
  std::vector<double> s(sample.begin(), sample.end());
  std::sort(s.begin(), s.end());
  return ks_statistic_sorted(s, measure);
}

double ks_statistic_sorted(std::span<const double> s, const Measure& measure) {
  if (s.empty()) throw DomainError("KS statistic of an empty sample");
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t j = i;
    while (j < s.size() && s[j] == s[i]) ++j;
    // i values lie strictly below s[i], j values at or below it
    d = std::max(d, std::abs(static_cast<double>(j) / n - measure.cdf(s[i])));
    d = std::max(d, std::abs(static_cast<double>(i) / n - measure.cdf_left(s[i])));
    i = j;
  }
  return d;
}

KsResult check_distribution(std::span<const double> x, const Measure& measure, double rho,
                            std::size_t discard) {
  require_length(x.size(), discard + 1, "check_distribution");
  KsResult r;
  const auto tail = x.subspan(discard);
  r.n = tail.size();
  r.statistic = ks_statistic(tail, measure);
  const double ar = std::abs(rho);
  r.n_eff = static_cast<double>(r.n) * (1.0 - ar) / (1.0 + ar);
  r.threshold_raw = kKsCoefficient / std::sqrt(static_cast<double>(r.n));
  r.threshold_adjusted = kKsCoefficient / std::sqrt(r.n_eff);
  r.pass_raw = r.statistic < r.threshold_raw;
  r.pass_adjusted = r.statistic < r.threshold_adjusted;
  return r;
}

KsResult check_distribution(const ChainRun& run, const Measure& measure) {
  return check_distribution(run.values, measure, run.params.rho);
}

namespace {

std::vector<double> quantile_edges(const Measure& measure, std::size_t bins) {
  std::vector<double> e;
  for (std::size_t k = 1; k < bins; ++k) {
    e.push_back(measure.quantile(static_cast<double>(k) / static_cast<double>(bins)));
  }
  return e;
}

std::size_t bin_of(const std::vector<double>& edges, double x) {
  return static_cast<std::size_t>(std::lower_bound(edges.begin(), edges.end(), x) - edges.begin());
}

}  // namespace

ReversibilityResult reversibility_test(std::span<const double> x, const Measure& measure,
                                       std::size_t bins) {
  const auto edges = quantile_edges(measure, bins);
  std::vector<double> counts(bins * bins, 0.0);
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    counts[bin_of(edges, x[k]) * bins + bin_of(edges, x[k + 1])] += 1.0;
  }
  ReversibilityResult r;
  r.bins = bins;
  for (std::size_t i = 0; i < bins; ++i) {
    for (std::size_t j = i + 1; j < bins; ++j) {
      const double a = counts[i * bins + j], b = counts[j * bins + i];
      if (a + b == 0.0) continue;
      ++r.pairs_tested;
      r.max_abs_z = std::max(r.max_abs_z, std::abs(a - b) / std::sqrt(a + b));
    }
  }
  return r;
}

BinningDiagnostic binning_diagnostic(std::span<const double> x, const Measure& measure, double a,
                                     std::size_t bins, std::size_t min_count) {
  const auto edges = quantile_edges(measure, bins);
  const std::size_t cells = bins * bins;
  std::vector<double> cnt(cells, 0.0), su(cells, 0.0), sv(cells, 0.0), sm(cells, 0.0);
  for (std::size_t k = 1; k + 1 < x.size(); ++k) {
    const std::size_t c = bin_of(edges, x[k - 1]) * bins + bin_of(edges, x[k + 1]);
    cnt[c] += 1.0;
    su[c] += x[k - 1];
    sv[c] += x[k + 1];
    sm[c] += x[k];
  }
  BinningDiagnostic d;
  d.bins = bins;
  for (std::size_t c = 0; c < cells; ++c) {
    if (cnt[c] < static_cast<double>(min_count)) continue;
    ++d.cells_used;
    const double dev = sm[c] / cnt[c] - a * (su[c] + sv[c]) / cnt[c];
    d.max_abs_deviation = std::max(d.max_abs_deviation, std::abs(dev));
  }
  return d;
}

bool VerifyReport::correlations_pass() const {
  return std::all_of(correlation_residuals.begin(), correlation_residuals.end(),
                     [](const CorrelationResidual& c) { return c.pass; });
}
bool VerifyReport::regression_pass() const { return all_of_pass(regression_residuals); }
bool VerifyReport::variance_pass() const { return all_of_pass(variance_residuals); }
bool VerifyReport::single_cond_pass() const {
  return all_of_pass(single_cond_residuals.mean) && all_of_pass(single_cond_residuals.second_moment);
}
bool VerifyReport::all_pass() const {
  return correlations_pass() && regression_pass() && variance_pass() && single_cond_pass() &&
         ks.pass_adjusted && support_ok;
}

VerifyReport verify_chain(const ChainRun& run, std::size_t k_max) {
  VerifyReport rep;
  rep.params = run.params;
  rep.n_samples = run.values.size();
  rep.seed = run.seed;
  const Measure mu(run.params.q);
  const auto dict = default_dictionary(run.params.q);
  rep.correlation_residuals = check_correlations(run, k_max);
  rep.regression_residuals = check_conditional_mean(run, dict);
  rep.variance_residuals = check_conditional_variance(run, dict);
  rep.single_cond_residuals = check_single_conditioning(run);
  rep.ks = check_distribution(run, mu);
  rep.reversibility = reversibility_test(run.values, mu);
  rep.binning = binning_diagnostic(run.values, mu, run.params.a);
  for (double v : run.values) rep.max_abs_value = std::max(rep.max_abs_value, std::abs(v));
  if (mu.kind() != MeasureKind::Gaussian) {
    rep.support_ok = rep.max_abs_value <= mu.support_halfwidth() + 1e-9;
  }
  return rep;
}

std::vector<Residual> corrupted_variance_check(const ChainRun& run) {
  const ModelParams& p = run.params;
  return check_conditional_variance(run.values, p.B, p.A, p.C, p.rho,
                                    default_dictionary(p.q));
}

bool CounterexampleReport::correlations_match() const {
  return std::all_of(even_lag_correlations.begin(), even_lag_correlations.end(),
                     [](const CorrelationResidual& c) { return c.pass; });
}
bool CounterexampleReport::regression_pass() const { return all_of_pass(regression_residuals); }
bool CounterexampleReport::variance_pass() const { return all_of_pass(variance_residuals); }

double counterexample_constant(double rho, double a) {
  const double b2 = 1.0 - a * a;
  const double s = std::sqrt(1.0 - rho * rho);
  return a * a * s * s + b2 * s;
}

std::vector<double> ks_q_grid() {
  std::vector<double> g;
  for (int i = -20; i <= 20; ++i) g.push_back(i / 20.0);
  return g;
}

CounterexampleReport verify_counterexample(const std::vector<CounterexampleRun>& runs,
                                           std::size_t max_even_lag) {
  if (runs.empty()) throw DomainError("verify_counterexample needs at least one replication");
  CounterexampleReport rep;
  const double rho = runs.front().rho, a = runs.front().a;
  const double b = runs.front().b, r = runs.front().r;
  rep.rho = rho;
  rep.a = a;
  rep.alpha = 0.5 * rho;
  rep.C = counterexample_constant(rho, a);
  rep.reps = runs.size();
  rep.length = runs.front().values.size();
  for (const auto& run : runs) {
    if (run.rho != rho || run.a != a || run.values.size() != rep.length) {
      throw DomainError("replications must share rho, a and length");
    }
  }
  require_length(rep.length, std::max<std::size_t>(100 * max_even_lag, 3), "verify_counterexample");

  // Even-lag correlations; the field has mean 0 and unit variance by construction.
  for (std::size_t k = 2; k <= max_even_lag; k += 2) {
    std::vector<double> means;
    for (const auto& run : runs) {
      const auto& z = run.values;
      double s = 0.0;
      for (std::size_t t = 0; t + k < z.size(); ++t) s += z[t] * z[t + k];
      means.push_back(s / static_cast<double>(z.size() - k));
    }
    const MeanEstimate m = between_replications(means);
    CorrelationResidual c;
    c.lag = k;
    c.empirical = m.mean;
    c.target = a * a + b * b * std::pow(r, static_cast<double>(k));
    c.stderr_ = m.stderr_;
    c.threshold = rep.correlation_tolerance;
    c.pass = std::abs(c.empirical - c.target) <= c.threshold;
    rep.even_lag_correlations.push_back(c);
  }

  const auto dict = default_dictionary(1.0);
  const double alpha = rep.alpha;
  auto ensemble = [&](auto&& e) {
    std::vector<std::vector<double>> per(dict.size());
    for (const auto& run : runs) {
      const auto& z = run.values;
      std::vector<double> acc(dict.size(), 0.0);
      for (std::size_t k = 1; k + 1 < z.size(); ++k) {
        const double ek = e(z[k - 1], z[k], z[k + 1]);
        for (std::size_t i = 0; i < dict.size(); ++i) acc[i] += ek * dict[i].g(z[k - 1], z[k + 1]);
      }
      for (std::size_t i = 0; i < dict.size(); ++i) {
        per[i].push_back(acc[i] / static_cast<double>(z.size() - 2));
      }
    }
    std::vector<Residual> out;
    for (std::size_t i = 0; i < dict.size(); ++i) {
      out.push_back(make_residual(dict[i].name, between_replications(per[i])));
    }
    return out;
  };
  rep.regression_residuals =
      ensemble([alpha](double u, double m, double v) { return m - alpha * (u + v); });
  const double c_true = rep.C;
  rep.variance_residuals = ensemble([alpha, c_true](double u, double m, double v) {
    return m * m - alpha * alpha * (u + v) * (u + v) - c_true;
  });
  const double c_stated = 1.0 - rho * rho;
  rep.variance_residuals_stated_c = ensemble([alpha, c_stated](double u, double m, double v) {
    return m * m - alpha * alpha * (u + v) * (u + v) - c_stated;
  });

  // KS of the pooled marginal against every member of the family. Under the
  // null of a stationary chain with the same lag-one correlation the pooled
  // replications carry n (1-|r1|)/(1+|r1|) effective samples.
  std::vector<double> pooled;
  pooled.reserve(rep.reps * rep.length);
  for (const auto& run : runs) pooled.insert(pooled.end(), run.values.begin(), run.values.end());
  std::sort(pooled.begin(), pooled.end());
  const double r1 = std::abs(counterexample_correlation(rho, a, 1));
  const double n_eff = static_cast<double>(pooled.size()) * (1.0 - r1) / (1.0 + r1);
  rep.ks_threshold = kKsCoefficient / std::sqrt(n_eff);
  rep.min_ks_over_q = 1.0;
  for (double q : ks_q_grid()) {
    const double d = ks_statistic_sorted(pooled, Measure(q));
    if (d < rep.min_ks_over_q) {
      rep.min_ks_over_q = d;
      rep.argmin_q = q;
    }
  }
  rep.ks_rejects_family = rep.min_ks_over_q > rep.ks_threshold;
  return rep;
}

}  // namespace qfield

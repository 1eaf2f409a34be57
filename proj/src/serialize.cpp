#include "qfield/serialize.hpp"

#include <charconv>
#include <cmath>

namespace qfield {

using nlohmann::json;

json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

json to_json(const ModelParams& p) {
  return json{{"schema_version", kSchemaVersion},
              {"rho", number(p.rho)},
              {"R", number(p.R)},
              {"q", number(p.q)},
              {"a", number(p.a)},
              {"A", number(p.A)},
              {"B", number(p.B)},
              {"C", number(p.C)},
              {"D", number(p.D)},
              {"gamma", number(p.gamma)},
              {"support_halfwidth", number(p.support_halfwidth)}};
}

json to_json(const KernelEvaluation& e) {
  return json{{"schema_version", kSchemaVersion},
              {"value", number(e.value)},
              {"method", std::string(to_string(e.method))},
              {"truncation", e.truncation},
              {"residual", number(e.residual)}};
}

json to_json(const Residual& r) {
  return json{{"name", r.name},
              {"value", number(r.value)},
              {"stderr", number(r.stderr_)},
              {"threshold", number(r.threshold)},
              {"verdict", r.pass ? "pass" : "fail"}};
}

json to_json(const CorrelationResidual& c) {
  return json{{"lag", c.lag},
              {"empirical", number(c.empirical)},
              {"target", number(c.target)},
              {"stderr", number(c.stderr_)},
              {"threshold", number(c.threshold)},
              {"verdict", c.pass ? "pass" : "fail"}};
}

json to_json(const KsResult& k) {
  return json{{"statistic", number(k.statistic)},
              {"n", k.n},
              {"n_eff", number(k.n_eff)},
              {"threshold_raw", number(k.threshold_raw)},
              {"threshold_adjusted", number(k.threshold_adjusted)},
              {"verdict_raw", k.pass_raw ? "pass" : "fail"},
              {"verdict", k.pass_adjusted ? "pass" : "fail"}};
}

namespace {

template <class T>
json array_of(const std::vector<T>& v) {
  json a = json::array();
  for (const auto& x : v) a.push_back(to_json(x));
  return a;
}

const char* verdict(bool ok) { return ok ? "pass" : "fail"; }

}  // namespace

json to_json(const VerifyReport& r) {
  json params = to_json(r.params);
  params.erase("schema_version");
  return json{
      {"schema_version", kSchemaVersion},
      {"params", params},
      {"n_samples", r.n_samples},
      {"seed", r.seed},
      {"correlation_residuals", array_of(r.correlation_residuals)},
      {"regression_residuals", array_of(r.regression_residuals)},
      {"variance_residuals", array_of(r.variance_residuals)},
      {"single_cond_residuals",
       {{"mean", array_of(r.single_cond_residuals.mean)},
        {"second_moment", array_of(r.single_cond_residuals.second_moment)}}},
      {"ks", to_json(r.ks)},
      {"support", {{"max_abs_value", number(r.max_abs_value)}, {"verdict", verdict(r.support_ok)}}},
      {"diagnostics",
       {{"reversibility",
         {{"bins", r.reversibility.bins},
          {"pairs_tested", r.reversibility.pairs_tested},
          {"max_abs_z", number(r.reversibility.max_abs_z)}}},
        {"binned_conditional_mean",
         {{"bins", r.binning.bins},
          {"cells_used", r.binning.cells_used},
          {"max_abs_deviation", number(r.binning.max_abs_deviation)}}}}},
      {"verdicts",
       {{"correlations", verdict(r.correlations_pass())},
        {"conditional_mean", verdict(r.regression_pass())},
        {"conditional_variance", verdict(r.variance_pass())},
        {"single_conditioning", verdict(r.single_cond_pass())},
        {"distribution", verdict(r.ks.pass_adjusted)},
        {"support", verdict(r.support_ok)}}},
      {"verdict", verdict(r.all_pass())}};
}

json to_json(const CounterexampleReport& r) {
  return json{
      {"schema_version", kSchemaVersion},
      {"rho", number(r.rho)},
      {"a", number(r.a)},
      {"alpha", number(r.alpha)},
      {"C", number(r.C)},
      {"C_stated", number(1.0 - r.rho * r.rho)},
      {"reps", r.reps},
      {"length", r.length},
      {"even_lag_correlations", array_of(r.even_lag_correlations)},
      {"regression_residuals", array_of(r.regression_residuals)},
      {"variance_residuals", array_of(r.variance_residuals)},
      {"variance_residuals_stated_C", array_of(r.variance_residuals_stated_c)},
      {"ks",
       {{"min_statistic", number(r.min_ks_over_q)},
        {"argmin_q", number(r.argmin_q)},
        {"threshold", number(r.ks_threshold)},
        {"family_rejected", r.ks_rejects_family}}},
      {"note", "identities checked in two-neighbour form only; the field is not Markov"},
      {"verdicts",
       {{"correlations_match_mixture", verdict(r.correlations_match())},
        {"conditional_mean", verdict(r.regression_pass())},
        {"conditional_variance", verdict(r.variance_pass())},
        {"family_rejected", verdict(r.ks_rejects_family)}}}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace qfield

#include "qfield/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "CLI11.hpp"
#include "qfield/error.hpp"
#include "qfield/kernel.hpp"
#include "qfield/measure.hpp"
#include "qfield/qpoly.hpp"
#include "qfield/serialize.hpp"
#include "qfield/verify.hpp"

namespace qfield::cli {
namespace {

using nlohmann::json;

constexpr std::size_t kSimulateSteps = 100000;
constexpr std::size_t kVerifySteps = 1000000;
constexpr std::size_t kCounterexampleSteps = 100000;
constexpr std::size_t kPolyGrid = 11;
constexpr std::size_t kDensityGrid = 201;
constexpr std::size_t kPolyDegree = 8;
constexpr std::size_t kMomentDegree = 10;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<json>> rows;
};

std::string cell(const json& v) {
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_null()) return "nan";
  return v.dump();
}

std::string render_table(const Table& t, const std::string& format) {
  if (format == "json") {
    json a = json::array();
    for (const auto& row : t.rows) {
      json o = json::object();
      for (std::size_t i = 0; i < t.columns.size(); ++i) o[t.columns[i]] = row[i];
      a.push_back(o);
    }
    return dump(a);
  }
  std::string s;
  for (std::size_t i = 0; i < t.columns.size(); ++i) s += (i ? "," : "") + t.columns[i];
  s += "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) s += ',';
      s += cell(row[i]);
    }
    s += '\n';
  }
  return s;
}

std::string format_or(const CliConfig& c, const char* fallback) {
  const std::string f = c.format.empty() ? fallback : c.format;
  if (f != "csv" && f != "json") throw UsageError("--format must be csv or json");
  return f;
}

double need(const std::optional<double>& v, const char* flag) {
  if (!v) throw UsageError(std::string("missing required flag ") + flag);
  return *v;
}

ModelParams model_from(const CliConfig& c) {
  const double rho = need(c.rho, "--rho");
  if (c.R && c.q) throw UsageError("give either --R or --q, not both");
  if (c.q) return params_from_q(rho, *c.q);
  return derive_params(rho, need(c.R, "--R"));
}

// q for the measure-only commands: --q, or derived from --rho/--R.
double measure_q(const CliConfig& c) {
  if (c.q) {
    if (c.R) throw UsageError("give either --R or --q, not both");
    if (!(*c.q >= -1.0 && *c.q <= 1.0)) throw DomainError("requires -1 <= q <= 1");
    return *c.q;
  }
  if (c.rho && c.R) return derive_params(*c.rho, *c.R).q;
  throw UsageError("missing required flag --q (or --rho with --R)");
}

std::vector<double> line_grid(const Measure& m, std::size_t n, double gaussian_half) {
  const double h = m.kind() == MeasureKind::Gaussian ? gaussian_half : m.support_halfwidth();
  if (n < 2) throw UsageError("--grid must be at least 2");
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = -h + 2.0 * h * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  g[n - 1] = h;
  return g;
}

Rendered do_params(const CliConfig& c) {
  const ModelParams p = model_from(c);
  json j = to_json(p);
  j["identity_residual"] = number(params_residual(p));
  return {dump(j), ExitCode::Success};
}

Rendered do_poly(const CliConfig& c) {
  const double q = measure_q(c);
  Normalization norm;
  if (c.normalization == "monic") {
    norm = Normalization::Monic;
  } else if (c.normalization == "orthonormal") {
    norm = Normalization::Orthonormal;
  } else {
    throw UsageError("--normalization must be monic or orthonormal");
  }
  const std::size_t n_max = c.n_max ? c.n_max : kPolyDegree;
  const PolyFamily fam(effective_q(q), norm, n_max);
  std::vector<double> xs = c.xs;
  if (xs.empty()) xs = line_grid(Measure(q), c.grid ? c.grid : kPolyGrid, 4.0);
  Table t{{"n", "x", "value"}, {}};
  for (std::size_t n = 0; n <= n_max; ++n) {
    for (double x : xs) t.rows.push_back({n, x, fam.eval(n, x)});
  }
  return {render_table(t, format_or(c, "csv")), ExitCode::Success};
}

Rendered do_density(const CliConfig& c) {
  const Measure m(measure_q(c));
  if (m.kind() == MeasureKind::TwoPoint) {
    throw DomainError("the two-point measure (q = -1) has no density");
  }
  Table t{{"x", "f", "F"}, {}};
  for (double x : line_grid(m, c.grid ? c.grid : kDensityGrid, 5.0)) {
    t.rows.push_back({x, m.density(x), m.cdf(x)});
  }
  return {render_table(t, format_or(c, "csv")), ExitCode::Success};
}

Rendered do_moments(const CliConfig& c) {
  const auto mom = moments(measure_q(c), c.n_max ? c.n_max : kMomentDegree);
  const std::string f = format_or(c, "json");
  if (f == "json") {
    json a = json::array();
    for (double v : mom) a.push_back(number(v));
    return {dump(a), ExitCode::Success};
  }
  Table t{{"n", "moment"}, {}};
  for (std::size_t n = 0; n < mom.size(); ++n) t.rows.push_back({n, mom[n]});
  return {render_table(t, f), ExitCode::Success};
}

Rendered do_kernel(const CliConfig& c) {
  const double rho = need(c.rho, "--rho");
  if (!c.q && !c.R) throw UsageError("missing required flag --q (or --R)");
  const double q = measure_q(c);
  if (rho == 0.0 || !(std::abs(rho) < 1.0)) throw DomainError("requires 0 < |rho| < 1");
  const KernelMethod method = parse_kernel_method(c.method);
  const TransitionKernel k(q, rho, method);
  const KernelEvaluation ev = k.evaluate(need(c.x, "--x"), need(c.y, "--y"), method);
  json j = to_json(ev);
  j["q"] = number(q);
  j["rho"] = number(rho);
  return {dump(j), ExitCode::Success};
}

Rendered do_simulate(const CliConfig& c) {
  const ChainRun run = simulate_chain(model_from(c), c.steps ? c.steps : kSimulateSteps, c.seed);
  Table t{{"step", "value"}, {}};
  t.rows.reserve(run.values.size());
  for (std::size_t i = 0; i < run.values.size(); ++i) t.rows.push_back({i, run.values[i]});
  return {render_table(t, format_or(c, "csv")), ExitCode::Success};
}

Rendered do_counterexample(const CliConfig& c) {
  const double rho = need(c.rho, "--rho");
  if (c.reps < 2) throw UsageError("--reps must be at least 2");
  const auto runs = simulate_counterexample_replications(
      rho, c.a, c.steps ? c.steps : kCounterexampleSteps, c.reps, c.seed);
  const CounterexampleReport rep = verify_counterexample(runs);
  json j = to_json(rep);
  j["seed"] = c.seed;
  const bool ok = rep.correlations_match() && rep.regression_pass() && rep.variance_pass() &&
                  rep.ks_rejects_family;
  return {dump(j), ok ? ExitCode::Success : ExitCode::CheckFailure};
}

Rendered do_verify(const CliConfig& c) {
  const ChainRun run = simulate_chain(model_from(c), c.steps ? c.steps : kVerifySteps, c.seed);
  const VerifyReport rep = verify_chain(run, c.k_max);
  json j = to_json(rep);
  j["sampler"] = std::string(to_string(run.sampler_kind));
  return {dump(j), rep.all_pass() ? ExitCode::Success : ExitCode::CheckFailure};
}

void write_atomic(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    f << text;
    f.flush();
    if (!f) throw std::runtime_error("write to " + tmp.string() + " failed");
  }
  fs::rename(tmp, target);
}

}  // namespace

std::string resolve_output_path(const std::string& out) {
  namespace fs = std::filesystem;
  const fs::path p(out);
  const char* dir = std::getenv(kOutputDirEnv);
  if (p.is_relative() && dir != nullptr && *dir != '\0') return (fs::path(dir) / p).string();
  return p.string();
}

std::optional<CliConfig> parse(int argc, const char* const* argv, std::ostream& out) {
  CliConfig c;
  CLI::App app{"q-Gaussian stationary fields: coefficients, polynomials, kernels, chains"};
  app.require_subcommand(1);
  double rho = 0, R = 0, q = 0, x = 0, y = 0;

  auto model = [&](CLI::App* s) {
    s->add_option("--rho", rho, "lag-one correlation, 0 < |rho| < 1");
    s->add_option("--R", R, "family parameter in [0, 2]");
    s->add_option("--q", q, "q in [-1, 1], instead of --R");
  };
  auto output = [&](CLI::App* s, bool has_format) {
    s->add_option("--out", c.out, "output file (stdout if omitted)");
    if (has_format) s->add_option("--format", c.format, "csv or json");
  };

  auto* params = app.add_subcommand("params", "derived coefficients as JSON");
  model(params);
  output(params, false);

  auto* poly = app.add_subcommand("poly", "q-Hermite values, CSV n,x,value");
  model(poly);
  poly->add_option("--n-max", c.n_max, "highest degree");
  poly->add_option("--x", c.xs, "evaluation points");
  poly->add_option("--grid", c.grid, "number of equispaced points across the support");
  poly->add_option("--normalization", c.normalization, "monic or orthonormal");
  output(poly, true);

  auto* dens = app.add_subcommand("density", "density and cdf, CSV x,f,F");
  model(dens);
  dens->add_option("--grid", c.grid, "number of equispaced points");
  output(dens, true);

  auto* mom = app.add_subcommand("moments", "moments m_0..m_n as a JSON array");
  model(mom);
  mom->add_option("--n-max", c.n_max, "highest moment");
  output(mom, true);

  auto* ker = app.add_subcommand("kernel", "transition kernel K(x,y) as JSON");
  model(ker);
  ker->add_option("--x", x, "first point");
  ker->add_option("--y", y, "second point");
  ker->add_option("--method", c.method, "series, product or crosscheck");
  output(ker, false);

  auto* sim = app.add_subcommand("simulate", "stationary chain, CSV step,value");
  model(sim);
  sim->add_option("--steps", c.steps, "chain length");
  sim->add_option("--seed", c.seed, "random seed");
  output(sim, true);

  auto* cx = app.add_subcommand("counterexample", "periodic-plus-Gaussian field report, JSON");
  cx->add_option("--rho", rho, "0 < |rho| < 1");
  cx->add_option("--a", c.a, "mixing weight in [0, 1]");
  cx->add_option("--steps", c.steps, "length of each replication");
  cx->add_option("--reps", c.reps, "number of replications");
  cx->add_option("--seed", c.seed, "random seed");
  output(cx, false);

  auto* ver = app.add_subcommand("verify", "simulate and check every identity, JSON report");
  model(ver);
  ver->add_option("--steps", c.steps, "chain length");
  ver->add_option("--seed", c.seed, "random seed");
  ver->add_option("--k-max", c.k_max, "largest correlation lag");
  output(ver, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return std::nullopt;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  for (auto* s : app.get_subcommands()) {
    c.subcommand = s->get_name();
    auto given = [&](const char* flag) {
      auto* o = s->get_option_no_throw(flag);
      return o != nullptr && o->count() > 0;
    };
    if (given("--rho")) c.rho = rho;
    if (given("--R")) c.R = R;
    if (given("--q")) c.q = q;
    if (given("--x") && c.subcommand == "kernel") c.x = x;
    if (given("--y")) c.y = y;
  }
  return c;
}

Rendered render(const CliConfig& c) {
  if (c.subcommand == "params") return do_params(c);
  if (c.subcommand == "poly") return do_poly(c);
  if (c.subcommand == "density") return do_density(c);
  if (c.subcommand == "moments") return do_moments(c);
  if (c.subcommand == "kernel") return do_kernel(c);
  if (c.subcommand == "simulate") return do_simulate(c);
  if (c.subcommand == "counterexample") return do_counterexample(c);
  if (c.subcommand == "verify") return do_verify(c);
  throw UsageError("unknown subcommand '" + c.subcommand + "'");
}

int run(const CliConfig& config, std::ostream& out, std::ostream& err) {
  try {
    const Rendered r = render(config);
    if (config.out.empty()) {
      out << r.text;
      out.flush();
    } else {
      write_atomic(resolve_output_path(config.out), r.text);
    }
    return static_cast<int>(r.code);
  } catch (const std::invalid_argument& e) {  // UsageError, DomainError
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::Usage);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::CheckFailure);
  }
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::optional<CliConfig> config;
  try {
    config = parse(argc, argv, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::Usage);
  }
  if (!config) return static_cast<int>(ExitCode::Success);
  return run(*config, out, err);
}

}  // namespace qfield::cli

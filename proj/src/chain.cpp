#include "qfield/chain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qfield/error.hpp"
#include "qfield/measure.hpp"
#include "qfield/rng.hpp"

namespace qfield {
namespace {

constexpr std::size_t kMaxConsecutiveRejections = 1'000'000;
constexpr int kMaxRebuilds = 6;

// sup over theta_y of the kernel at fixed theta_x: grid scan, then golden
// section around the best grid cell.
double sup_over_y(double q, double rho, double tx, std::size_t n) {
  const double pi = std::numbers::pi;
  const double h = pi / static_cast<double>(n - 1);
  std::size_t best = 0;
  double best_v = -1.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double v = kernel_product_angles(q, rho, tx, h * j);
    if (v > best_v) {
      best_v = v;
      best = j;
    }
  }
  double lo = std::max(0.0, h * (static_cast<double>(best) - 1.0));
  double hi = std::min(pi, h * (static_cast<double>(best) + 1.0));
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
  double fa = kernel_product_angles(q, rho, tx, a), fb = kernel_product_angles(q, rho, tx, b);
  for (int it = 0; it < 60; ++it) {
    if (fa > fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - g * (hi - lo);
      fa = kernel_product_angles(q, rho, tx, a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + g * (hi - lo);
      fb = kernel_product_angles(q, rho, tx, b);
    }
  }
  return std::max({best_v, fa, fb});
}

}  // namespace

std::string_view to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::TwoState: return "two_state";
    case SamplerKind::Gaussian: return "gaussian";
    case SamplerKind::RejectionKernel: return "rejection_kernel";
  }
  return "rejection_kernel";
}

KernelSupBound::KernelSupBound(double q, double rho, std::size_t cells, std::size_t y_grid,
                               double safety)
    : q_(q), rho_(rho), safety_(safety), y_grid_(y_grid), bound_(cells) {
  const double h = std::numbers::pi / static_cast<double>(cells);
  std::vector<double> edge(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i) edge[i] = sup_over_y(q, rho, h * i, y_grid);
  for (std::size_t i = 0; i < cells; ++i) {
    const double mid = sup_over_y(q, rho, h * (i + 0.5), y_grid);
    bound_[i] = safety * std::max({edge[i], edge[i + 1], mid});
  }
}

double KernelSupBound::operator()(double theta_x) const {
  const double t = std::clamp(theta_x / std::numbers::pi, 0.0, 1.0);
  const auto i = std::min(bound_.size() - 1, static_cast<std::size_t>(t * bound_.size()));
  return bound_[i];
}

KernelSupBound KernelSupBound::refined() const {
  return KernelSupBound(q_, rho_, 2 * bound_.size(), 2 * y_grid_, safety_);
}

ChainRun simulate_chain(const ModelParams& params, std::size_t length, std::uint64_t seed) {
  if (length < 1) throw DomainError("chain length must be at least 1");
  if (params.rho == 0.0 || !(std::abs(params.rho) < 1.0)) {
    throw DomainError("requires 0 < |rho| < 1");
  }
  ChainRun run;
  run.params = params;
  run.length = length;
  run.seed = seed;
  run.values.resize(length);
  Rng rng(seed);
  const double rho = params.rho;

  switch (measure_kind(params.q)) {
    case MeasureKind::TwoPoint: {
      run.sampler_kind = SamplerKind::TwoState;
      const double stay = 0.5 * (1.0 + rho);
      double x = rng.uniform() < 0.5 ? -1.0 : 1.0;
      run.values[0] = x;
      for (std::size_t n = 1; n < length; ++n) {
        if (rng.uniform() >= stay) x = -x;
        run.values[n] = x;
      }
      return run;
    }
    case MeasureKind::Gaussian: {
      run.sampler_kind = SamplerKind::Gaussian;
      const double innov = std::sqrt(1.0 - rho * rho);
      double x = rng.normal();
      run.values[0] = x;
      for (std::size_t n = 1; n < length; ++n) {
        x = rho * x + innov * rng.normal();
        run.values[n] = x;
      }
      return run;
    }
    case MeasureKind::QNormal:
      break;
  }

  run.sampler_kind = SamplerKind::RejectionKernel;
  const double q = params.q;
  const Measure mu(q);
  KernelSupBound bound(q, rho);
  const double pi = std::numbers::pi;

  // Work in kernel angles theta = pi - phi, where x = 2 cos(theta)/sqrt(1-q).
  double theta = pi - mu.phi_quantile(rng.uniform());
  run.values[0] = 2.0 * std::cos(theta) / std::sqrt(1.0 - q);
  int rebuilds = 0;
  for (std::size_t n = 1; n < length; ++n) {
    std::size_t rejections = 0;
    for (;;) {
      const double ty = pi - mu.phi_quantile(rng.uniform());
      const double u = rng.uniform();
      ++run.proposals;
      const double k = kernel_product_angles(q, rho, theta, ty);
      const double m = bound(theta);
      if (k > m) {
        if (++rebuilds > kMaxRebuilds) {
          throw NumericalError("rejection envelope still violated after refinement");
        }
        bound = bound.refined();
        ++run.bound_rebuilds;
        rejections = 0;
        continue;
      }
      if (u * m <= k) {
        theta = ty;
        break;
      }
      if (++rejections >= kMaxConsecutiveRejections) {
        throw NumericalError("1e6 consecutive rejections: kernel bound is broken");
      }
    }
    run.values[n] = 2.0 * std::cos(theta) / std::sqrt(1.0 - q);
  }
  return run;
}

double counterexample_r(double rho) {
  if (rho == 0.0 || !(std::abs(rho) < 1.0)) throw DomainError("requires 0 < |rho| < 1");
  return (1.0 - std::sqrt(1.0 - rho * rho)) / rho;
}

double counterexample_correlation(double rho, double a, std::size_t k) {
  const double r = counterexample_r(rho);
  const double b2 = 1.0 - a * a;
  const double xi = (k % 2 == 0) ? 1.0 : rho;
  return a * a * xi + b2 * std::pow(r, static_cast<double>(k));
}

CounterexampleRun simulate_counterexample(double rho, double a, std::size_t length,
                                          std::uint64_t seed) {
  if (rho == 0.0 || !(std::abs(rho) < 1.0)) throw DomainError("requires 0 < |rho| < 1");
  if (!(a >= 0.0 && a <= 1.0)) throw DomainError("requires 0 <= a <= 1");
  if (length < 1) throw DomainError("length must be at least 1");
  CounterexampleRun run;
  run.rho = rho;
  run.a = a;
  run.b = std::sqrt(1.0 - a * a);
  run.r = counterexample_r(rho);
  run.seed = seed;
  Rng rng(seed);

  // P(xi_1 = xi_2 = s) = (1+rho)/4, P(xi_1 = -xi_2) = (1-rho)/4
  const int first = rng.uniform() < 0.5 ? -1 : 1;
  const int second = rng.uniform() < 0.5 * (1.0 + rho) ? first : -first;
  run.xi_pair = {second, first};  // xi_0 = xi_2

  const double innov = std::sqrt(1.0 - run.r * run.r);
  double g = rng.normal();
  run.values.resize(length);
  for (std::size_t k = 0; k < length; ++k) {
    if (k > 0) g = run.r * g + innov * rng.normal();
    run.values[k] = a * run.xi_pair[k % 2] + run.b * g;
  }
  return run;
}

std::vector<CounterexampleRun> simulate_counterexample_replications(
    double rho, double a, std::size_t length, std::size_t reps, std::uint64_t seed) {
  std::vector<CounterexampleRun> out;
  out.reserve(reps);
  for (std::size_t i = 0; i < reps; ++i) {
    out.push_back(simulate_counterexample(rho, a, length, mix_seed(seed, i)));
  }
  return out;
}

}  // namespace qfield

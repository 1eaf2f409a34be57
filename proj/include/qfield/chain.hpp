#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "qfield/kernel.hpp"
#include "qfield/params.hpp"

namespace qfield {

inline constexpr std::uint64_t kDefaultSeed = 20240917;

enum class SamplerKind { TwoState, Gaussian, RejectionKernel };

std::string_view to_string(SamplerKind k);

struct ChainRun {
  ModelParams params;
  std::size_t length = 0;
  std::uint64_t seed = 0;
  std::vector<double> values;
  SamplerKind sampler_kind = SamplerKind::RejectionKernel;
  std::size_t proposals = 0;       // rejection sampler only
  std::size_t bound_rebuilds = 0;  // envelope refinements triggered at run time
};

// Upper bound for sup_y K(x, y) as a function of the angle of x, tabulated per
// angle cell and inflated by a safety factor.
class KernelSupBound {
 public:
  KernelSupBound(double q, double rho, std::size_t cells = 256, std::size_t y_grid = 1024,
                 double safety = 1.1);

  double operator()(double theta_x) const;
  std::size_t cells() const { return bound_.size(); }
  std::size_t y_grid() const { return y_grid_; }

  // Same construction at twice the resolution.
  KernelSupBound refined() const;

 private:
  double q_, rho_, safety_;
  std::size_t y_grid_;
  std::vector<double> bound_;
};

// Stationary chain X_0 ~ mu, X_{n+1} ~ K(X_n, y) mu(dy).
//   q = -1: two-state chain, stay with probability (1+rho)/2
//   q = 1:  AR(1), X_{n+1} = rho X_n + sqrt(1-rho^2) N(0,1)
//   else:   rejection from mu, accept with K(x,y)/M(x)
// The endpoint routing follows measure_kind(q). Throws NumericalError after
// 1e6 consecutive rejections.
ChainRun simulate_chain(const ModelParams& params, std::size_t length,
                        std::uint64_t seed = kDefaultSeed);

struct CounterexampleRun {
  double rho = 0.0;
  double a = 0.0;
  double b = 0.0;
  double r = 0.0;                 // AR coefficient of the Gaussian part
  std::array<int, 2> xi_pair{};   // xi at even / odd indices
  std::vector<double> values;     // Z_k = a xi_k + b gamma_k
  std::uint64_t seed = 0;
};

// (1 - sqrt(1-rho^2)) / rho; satisfies r/(1+r^2) = rho/2.
double counterexample_r(double rho);

// E(Z_0 Z_k) = a^2 corr(xi_0, xi_k) + b^2 r^k with corr(xi_0, xi_k) = 1 for
// even k and rho for odd k.
double counterexample_correlation(double rho, double a, std::size_t k);

// One realization of the 2-periodic two-valued sequence mixed with a Gaussian
// AR(1). Requires 0 < |rho| < 1 and 0 <= a <= 1.
CounterexampleRun simulate_counterexample(double rho, double a, std::size_t length,
                                          std::uint64_t seed = kDefaultSeed);

// Independent replications with seeds derived from `seed`. The xi pair is
// frozen within a replication, so ensemble statistics need many of them.
std::vector<CounterexampleRun> simulate_counterexample_replications(
    double rho, double a, std::size_t length, std::size_t reps, std::uint64_t seed = kDefaultSeed);

}  // namespace qfield

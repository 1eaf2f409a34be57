#include "qfield/params.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qfield/error.hpp"

namespace qfield {
namespace {

void require_rho(double rho) {
  if (!std::isfinite(rho)) throw DomainError("rho must be finite");
  if (rho == 0.0) throw DomainError("requires rho != 0 (i.i.d. sequences are excluded)");
  if (std::abs(rho) >= 1.0) {
    throw DomainError("requires r_2+1-2|rho|>0; with r_2 = rho^2 this means |rho| < 1");
  }
}

}  // namespace

ModelParams derive_params(double rho, double R) {
  require_rho(rho);
  if (!(R >= 0.0 && R <= 2.0)) {
    throw DomainError("requires 0 <= R <= 2 (got R = " + std::to_string(R) + ")");
  }
  const double r2 = rho * rho;
  const double r4 = r2 * r2;

  ModelParams p;
  p.rho = rho;
  p.R = R;
  if (R == 2.0) {
    p.q = 1.0;
  } else if (R == 0.0) {
    p.q = -1.0;
  } else {
    p.q = std::clamp((r4 + R - 1.0) / (1.0 + r4 * (R - 1.0)), -1.0, 1.0);
  }
  p.a = rho / (1.0 + r2);
  p.B = R * r2 / ((1.0 + r2) * (1.0 + r2));
  p.A = (1.0 - p.B) * r2 / (1.0 + r4);
  p.C = 1.0 - 2.0 * p.A - p.B * r2;
  p.D = 0.0;
  p.gamma = p.D / (1.0 - (1.0 + r2) * p.A);
  p.support_halfwidth = p.q >= 1.0 ? std::numeric_limits<double>::infinity()
                                   : 2.0 / std::sqrt(1.0 - p.q);
  return p;
}

double r_from_q(double rho, double q) {
  require_rho(rho);
  if (!(q >= -1.0 && q <= 1.0)) throw DomainError("requires -1 <= q <= 1");
  const double r4 = rho * rho * rho * rho;
  return std::clamp((1.0 + q) * (1.0 - r4) / (1.0 - q * r4), 0.0, 2.0);
}

ModelParams params_from_q(double rho, double q) {
  ModelParams p = derive_params(rho, r_from_q(rho, q));
  p.q = q;
  p.support_halfwidth = q >= 1.0 ? std::numeric_limits<double>::infinity()
                                 : 2.0 / std::sqrt(1.0 - q);
  return p;
}

double params_residual(const ModelParams& p) {
  const double r2 = p.rho * p.rho;
  const double r4 = r2 * r2;
  const double s = p.rho + 1.0 / p.rho;
  double worst = 0.0;
  auto take = [&](double v) { worst = std::max(worst, std::abs(v)); };
  take(p.A * (r2 + 1.0 / r2) + p.B - 1.0);
  take(p.C - (1.0 - 2.0 * p.A - p.B * r2));
  take(p.R - p.B * s * s);
  take(p.q * (1.0 + r4 * (p.R - 1.0)) - (r4 + p.R - 1.0));
  take(p.a - p.rho / (1.0 + r2));
  take(p.gamma);
  return worst;
}

CorrelationSequence solve_correlations(double rho, double r2, std::size_t K) {
  if (rho == 0.0 || !std::isfinite(rho)) throw DomainError("requires rho != 0");
  if (!(std::abs(r2) <= 1.0)) throw DomainError("requires |r_2| <= 1");
  const double lead = 1.0 + r2;
  if (!(r2 + 1.0 - 2.0 * std::abs(rho) > 0.0)) {
    throw DomainError("requires r_2+1-2|rho|>0");
  }
  // Roots of rho c^2 - (1+r2) c + rho have product 1; take the small one in
  // its cancellation-free form.
  const double disc = lead * lead - 4.0 * rho * rho;
  const double c = 2.0 * rho / (lead + std::sqrt(disc));

  CorrelationSequence seq;
  seq.rho = rho;
  seq.r2 = r2;
  seq.root = c;
  seq.values.resize(K + 1);
  seq.values[0] = 1.0;
  if (K >= 1) seq.values[1] = rho;
  double v = r2;
  for (std::size_t k = 2; k <= K; ++k) {
    seq.values[k] = v;
    v *= c;
  }
  return seq;
}

double correlation_recurrence_residual(const CorrelationSequence& seq, std::size_t k) {
  const auto& r = seq.values;
  if (k < 1 || k + 1 >= r.size()) throw DomainError("lag outside the sequence interior");
  return (1.0 + seq.r2) * r[k] - seq.rho * (r[k - 1] + r[k + 1]);
}

std::string_view to_string(Boundedness b) {
  switch (b) {
    case Boundedness::Bounded: return "bounded";
    case Boundedness::BoundedBelow: return "bounded_below";
    case Boundedness::BoundedAbove: return "bounded_above";
    case Boundedness::Unbounded: return "unbounded";
    case Boundedness::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

Boundedness classify_boundedness(double A, double B, double D, double rho, double tol) {
  if (rho == 0.0) throw DomainError("requires rho != 0");
  const double r2 = rho * rho;
  if (!(A < 1.0 / (1.0 + r2))) throw DomainError("requires A < 1/(1+rho^2)");
  const double lhs = A * (r2 + 1.0 / r2) + B;
  if (lhs < 1.0 - tol) return Boundedness::Bounded;
  if (std::abs(lhs - 1.0) <= tol) {
    if (D > 0.0) return Boundedness::BoundedBelow;
    if (D < 0.0) return Boundedness::BoundedAbove;
    return Boundedness::Inconclusive;
  }
  // lhs > 1: the bound argument gives nothing.
  return Boundedness::Inconclusive;
}

}  // namespace qfield

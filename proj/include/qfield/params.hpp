#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace qfield {

// Coefficients of a stationary field with linear two-sided regression
// a(x+y) and quadratic conditional second moment A(x^2+y^2)+Bxy+C+D(x+y).
//
// Everything is derived from (rho, R). q is stored once here and read by every
// downstream module; nothing recomputes it.
struct ModelParams {
  double rho = 0.0;
  double R = 0.0;
  double q = 0.0;
  double a = 0.0;
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
  double D = 0.0;
  double gamma = 0.0;
  double support_halfwidth = 0.0;  // +inf when q == 1
};

// Builds the coefficient set for rho in (-1,1)\{0} and R in [0,2].
// B = R rho^2/(1+rho^2)^2, A = (1-B) rho^2/(1+rho^4), C = 1-2A-B rho^2.
// Throws DomainError for rho == 0, |rho| >= 1 or R outside [0,2].
ModelParams derive_params(double rho, double R);

// The R that maps to a given q at this rho; inverse of
// q = (rho^4+R-1)/(1+rho^4(R-1)). Requires q in [-1,1].
double r_from_q(double rho, double q);

// derive_params(rho, r_from_q(rho, q)) with q pinned to the requested value.
ModelParams params_from_q(double rho, double q);

// Worst absolute residual over the defining identities of ModelParams:
// A(rho^2+1/rho^2)+B = 1, C = 1-2A-B rho^2, R = B(rho+1/rho)^2, the q formula
// and a = rho/(1+rho^2).
double params_residual(const ModelParams& p);

struct CorrelationSequence {
  double rho = 0.0;
  double r2 = 0.0;
  double root = 0.0;  // characteristic root c in (-1,1)
  std::vector<double> values;  // r_0 .. r_K
};

// Correlations r_0..r_K forced by the two-sided linear regression:
// r_0 = 1, r_1 = rho and r_k = r2 c^{k-2} for k >= 2, where c is the root of
// rho c^2 - (1+r2) c + rho = 0 inside (-1,1).
//
// The recurrence (1+r2) r_k = rho (r_{k-1}+r_{k+1}) then holds for every k >= 3.
// At k = 2 it holds only when r2 = rho^2, in which case r_k = rho^k.
CorrelationSequence solve_correlations(double rho, double r2, std::size_t K);

// (1+r2) r_k - rho (r_{k-1}+r_{k+1}); requires 1 <= k < values.size()-1.
double correlation_recurrence_residual(const CorrelationSequence& seq, std::size_t k);

enum class Boundedness { Bounded, BoundedBelow, BoundedAbove, Unbounded, Inconclusive };

std::string_view to_string(Boundedness b);

// Boundedness of X_0 implied by the coefficients. Requires A < 1/(1+rho^2).
// Unbounded is never returned: no converse is available.
Boundedness classify_boundedness(double A, double B, double D, double rho,
                                 double tol = 1e-12);

}  // namespace qfield

#pragma once

#include <cmath>
#include <limits>

#include "clcd/error.hpp"

namespace clcd {

namespace detail {

constexpr int kMaxGammaIterations = 10000;
constexpr double kGammaEps = 1e-16;

// Series for the lower regularized gamma P(a, x), valid for x < a + 1.
// Returns log P.
inline double log_gamma_p_series(double a, double x) {
  double ap = a;
  double del = 1.0 / a;
  double sum = del;
  for (int n = 0; n < kMaxGammaIterations; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kGammaEps) break;
  }
  return std::log(sum) - x + a * std::log(x) - std::lgamma(a);
}

// Modified Lentz continued fraction for the upper regularized gamma Q(a, x),
// valid for x >= a + 1. Returns log Q.
inline double log_gamma_q_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxGammaIterations; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kGammaEps) break;
  }
  return std::log(h) - x + a * std::log(x) - std::lgamma(a);
}

}  // namespace detail

// log Q(a, x), the upper regularized incomplete gamma function, without
// underflow for large x.
inline double log_gamma_q(double a, double x) {
  if (!(a > 0.0)) throw Error("gamma_q: a must be positive");
  if (x < 0.0) throw Error("gamma_q: x must be non-negative");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) {
    double p = std::exp(detail::log_gamma_p_series(a, x));
    return std::log1p(-p);
  }
  return detail::log_gamma_q_fraction(a, x);
}

inline double gamma_q(double a, double x) { return std::exp(log_gamma_q(a, x)); }

inline double gamma_p(double a, double x) {
  if (!(a > 0.0)) throw Error("gamma_p: a must be positive");
  if (x < 0.0) throw Error("gamma_p: x must be non-negative");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return std::exp(detail::log_gamma_p_series(a, x));
  return -std::expm1(detail::log_gamma_q_fraction(a, x));
}

// Upper tail of the chi-square distribution with `dof` degrees of freedom.
inline double chi2_sf(double statistic, double dof) {
  if (dof <= 0.0) return 1.0;
  if (statistic <= 0.0) return 1.0;
  return gamma_q(0.5 * dof, 0.5 * statistic);
}

inline double chi2_log_sf(double statistic, double dof) {
  if (dof <= 0.0 || statistic <= 0.0) return 0.0;
  return log_gamma_q(0.5 * dof, 0.5 * statistic);
}

}  // namespace clcd

#pragma once

#include <cmath>
#include <utility>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "switchrd/common.hpp"

namespace switchrd {

struct QuadResult {
  double value = 0;
  double error = 0;  // absolute error estimate
};

// Adaptive Gauss-Kronrod 15(7). Nodes are interior, so integrands may be
// singular at the interval endpoints as long as they are integrable.
template <typename F>
QuadResult integrate_adaptive(F&& f, double a, double b, double tol, unsigned max_depth = 17) {
  if (a == b) return {0.0, 0.0};
  double err = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      std::forward<F>(f), a, b, max_depth, tol, &err);
  return {value, err};
}

// Integral of f over [lo, hi] where f carries algebraic endpoint factors
// (y-lo)^alpha_lo and (hi-y)^alpha_hi. Exponents in (-1, 0) are regularized
// by the substitution y = endpoint +/- s^{1/(1+alpha)}, which turns the
// singular factor into a constant; nonnegative exponents integrate directly.
template <typename F>
QuadResult integrate_endpoint_algebraic(F&& f, double lo, double hi, double alpha_lo,
                                        double alpha_hi, double tol) {
  if (!(hi > lo)) return {0.0, 0.0};
  const double mid = 0.5 * (lo + hi);

  QuadResult left;
  if (alpha_lo > -1.0 && alpha_lo < 0.0) {
    const double gamma = 1.0 / (1.0 + alpha_lo);
    const double s_end = std::pow(mid - lo, 1.0 + alpha_lo);
    left = integrate_adaptive(
        [&f, lo, gamma](double s) { return f(lo + std::pow(s, gamma)) * gamma * std::pow(s, gamma - 1.0); },
        0.0, s_end, tol);
  } else {
    left = integrate_adaptive(f, lo, mid, tol);
  }

  QuadResult right;
  if (alpha_hi > -1.0 && alpha_hi < 0.0) {
    const double gamma = 1.0 / (1.0 + alpha_hi);
    const double s_end = std::pow(hi - mid, 1.0 + alpha_hi);
    right = integrate_adaptive(
        [&f, hi, gamma](double s) { return f(hi - std::pow(s, gamma)) * gamma * std::pow(s, gamma - 1.0); },
        0.0, s_end, tol);
  } else {
    right = integrate_adaptive(f, mid, hi, tol);
  }

  return {left.value + right.value, left.error + right.error};
}

}  // namespace switchrd

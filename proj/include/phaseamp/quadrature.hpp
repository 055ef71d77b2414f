// Adaptive Simpson quadrature on a finite interval.  Used as the
// verification path for the closed-form state-evolution maps and as the
// exact 1-D reduction of the spectral preprocessing expectations.

#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

namespace phaseamp {

namespace detail {

template <typename F>
double simpson_rec(const F& f, double a, double b, double fa, double fm,
                   double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  // Richardson: Simpson halving gains a factor 16, so delta/15 estimates
  // the error of (left+right).
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Integrates f over [a, b] to absolute tolerance tol (default 1e-12).
// The recursion depth cap (50) makes the worst case finite; integrands in
// this library are smooth, so the cap is never the binding constraint.
template <typename F>
double integrate(const F& f, double a, double b, double tol = 1e-12,
                 int max_depth = 50) {
  if (!(a <= b)) throw std::invalid_argument("integrate: a > b");
  if (a == b) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fm = f(m);
  const double fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

}  // namespace phaseamp

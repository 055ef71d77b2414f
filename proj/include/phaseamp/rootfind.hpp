// Bisection with bracket verification.  Every fixed-point and inverse in
// the state-evolution analysis is monotone with a guaranteed sign change,
// so bisection is unconditionally safe; no derivative-based methods are
// used anywhere.

#pragma once

#include <cmath>
#include <stdexcept>

namespace phaseamp {

// Root of f on [lo, hi] to absolute tolerance tol on the bracket width.
// Requires sign(f(lo)) != sign(f(hi)) (zero endpoints are accepted and
// returned directly); throws std::runtime_error on an invalid bracket.
template <typename F>
double bisect(const F& f, double lo, double hi, double tol = 1e-12) {
  if (!(lo <= hi)) throw std::invalid_argument("bisect: lo > hi");
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) {
    throw std::runtime_error("bisect: no sign change on bracket");
  }
  // 200 iterations bounds the loop even when tol underflows the bracket.
  for (int i = 0; i < 200 && hi - lo > tol; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = f(mid);
    if (fmid == 0.0) return mid;
    if ((fmid > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace phaseamp

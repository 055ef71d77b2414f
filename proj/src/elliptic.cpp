#include "phaseamp/elliptic.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace phaseamp {

namespace {

constexpr int kAgmMaxIters = 40;        // quadratic convergence; generous
constexpr double kAgmTol = 1e-15;       // |a-b| threshold relative to a
constexpr double kOneEdge = 1e-12;      // window around m=1 treated as m=1

void check_finite(double m) {
  if (!std::isfinite(m)) {
    throw std::domain_error("elliptic: non-finite parameter m");
  }
}

// AGM iteration for m in [0,1).  Returns K(m) and, via the standard
// c_k = (a_k - b_k)/2 accumulation, E(m) = K(m) (1 - Σ 2^{k-1} c_k²).
void agm_KE(double m, double* K_out, double* E_out) {
  double a = 1.0;
  double b = std::sqrt(1.0 - m);
  double sum = m / 2.0;  // 2^{-1} c_0² with c_0² = a_0² - b_0² = m
  double pow2 = 0.5;
  for (int i = 0; i < kAgmMaxIters; ++i) {
    const double c = (a - b) / 2.0;
    const double an = (a + b) / 2.0;
    const double bn = std::sqrt(a * b);
    a = an;
    b = bn;
    pow2 *= 2.0;
    sum += pow2 * c * c;
    if (std::fabs(c) <= kAgmTol * a) break;
  }
  const double K = M_PI / (2.0 * a);
  *K_out = K;
  if (E_out != nullptr) *E_out = K * (1.0 - sum);
}

}  // namespace

double elliptic_K(double m) {
  check_finite(m);
  if (m >= 1.0 - kOneEdge) {
    throw std::domain_error("elliptic_K: m >= 1 (logarithmic divergence), m=" +
                            std::to_string(m));
  }
  if (m < 0.0) {
    // Imaginary-modulus transform onto [0,1).
    return elliptic_K(-m / (1.0 - m)) / std::sqrt(1.0 - m);
  }
  double K, E;
  agm_KE(m, &K, &E);
  return K;
}

double elliptic_E(double m) {
  check_finite(m);
  if (m > 1.0) {
    throw std::domain_error("elliptic_E: m > 1, m=" + std::to_string(m));
  }
  if (m >= 1.0 - kOneEdge) return 1.0;  // E(1) = 1 exactly
  if (m < 0.0) {
    return std::sqrt(1.0 - m) * elliptic_E(-m / (1.0 - m));
  }
  double K, E;
  agm_KE(m, &K, &E);
  return E;
}

double elliptic_T(double m) {
  check_finite(m);
  if (m >= 1.0 - kOneEdge) {
    if (m > 1.0) throw std::domain_error("elliptic_T: m > 1");
    return 1.0;  // (1-m)K(m) -> 0, so T(1⁻) = E(1) = 1
  }
  if (m >= 0.0) {
    double K, E;
    agm_KE(m, &K, &E);
    return E - (1.0 - m) * K;
  }
  return elliptic_E(m) - (1.0 - m) * elliptic_K(m);
}

EllipticDerivatives elliptic_derivatives(double m) {
  check_finite(m);
  if (!(m > 0.0 && m < 1.0)) {
    throw std::domain_error("elliptic_derivatives: m outside (0,1), m=" +
                            std::to_string(m));
  }
  double K, E;
  agm_KE(m, &K, &E);
  EllipticDerivatives d;
  d.dK = (E - (1.0 - m) * K) / (2.0 * m * (1.0 - m));
  d.dE = (E - K) / (2.0 * m);
  d.dT = K / 2.0;
  return d;
}

}  // namespace phaseamp

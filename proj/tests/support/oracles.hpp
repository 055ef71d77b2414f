// Test-only oracles, deliberately independent of the library's numerics:
// a fixed-grid composite Simpson integrator with Richardson refinement, a
// centered finite-difference stencil, and reference values computed with
// an arbitrary-precision library (mpmath, mp.dps=30) and frozen here as
// double literals.

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace testsupport {

// Composite Simpson on a fixed grid of `panels` (even) subintervals.
template <typename F>
double simpson_fixed(F&& f, double a, double b, std::size_t panels) {
  if (panels < 2 || panels % 2 != 0) {
    throw std::invalid_argument("simpson_fixed: panels must be even >= 2");
  }
  const double h = (b - a) / static_cast<double>(panels);
  double sum = f(a) + f(b);
  for (std::size_t k = 1; k < panels; ++k) {
    sum += f(a + h * static_cast<double>(k)) * (k % 2 == 1 ? 4.0 : 2.0);
  }
  return sum * h / 3.0;
}

// Doubles the panel count until two refinements agree; smooth integrands
// on short intervals settle long before the cap.
template <typename F>
double simpson(F&& f, double a, double b, double tol = 1e-13) {
  std::size_t panels = 64;
  double prev = simpson_fixed(f, a, b, panels);
  for (int round = 0; round < 12; ++round) {
    panels *= 2;
    const double cur = simpson_fixed(f, a, b, panels);
    if (std::abs(cur - prev) <= tol * (1.0 + std::abs(cur))) return cur;
    prev = cur;
  }
  return prev;
}

// Centered first difference.
template <typename F>
double central_diff(F&& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Reference values, frozen from mpmath (mp.dps = 30).
namespace oracle {

// Complete elliptic integrals, parameter convention m.
inline constexpr double K_005 = 1.5910034537907921801;
inline constexpr double K_025 = 1.6857503548125960429;
inline constexpr double K_05 = 1.8540746773013719184;
inline constexpr double K_06 = 1.9495677498060258827;
inline constexpr double K_075 = 2.1565156474996432354;
inline constexpr double E_005 = 1.5509733517804723277;
inline constexpr double E_03 = 1.445363064412665262;
inline constexpr double E_05 = 1.3506438810476755025;
inline constexpr double E_06 = 1.2984280350469131676;
inline constexpr double E_075 = 1.2110560275684595248;
inline constexpr double T_06 = 0.51860093512450281453;
inline constexpr double K_neg1 = 1.3110287771460599052;
inline constexpr double E_neg5 = 2.8301982463458773125;

// Integral identities (iv) and (v) at m = 2: both sides agree to 30 digits.
inline constexpr double identity_iv_m2 = 0.10553145176271316226;
inline constexpr double identity_v_m2 = 0.51708314405664073728;

// phi profiles.
inline constexpr double phi1_05 = 0.81286533580320924227;
inline constexpr double phi1_1 = 0.59907011736779610372;
inline constexpr double phi3_1 = 1.910098894513856009;
inline constexpr double phi3_2 = 3.3295836107826757117;

// Complex SE maps at (alpha, sigma2) = (0.3, 0.3), delta = 3, noiseless.
inline constexpr double psi1_c_03_03 = 0.38925056212380652943;
inline constexpr double psi2_c_03_03_d3 = 0.46876786462499815502;

// phi1 inverse and the complex alpha-nullcline at alpha = 0.5274.
inline constexpr double phi1_inv_05274 = 1.2210986256423284195;
inline constexpr double f1_inv_c_05274 = 0.41474555078591269652;

// Complex lower boundary L(0.5; delta = 3).
inline constexpr double l_c_05_d3 = 0.34967978068171506623;

// Noisy SE fixed points at delta = 3, sigma_w2 = 1e-4.
inline constexpr double alpha_star_c = 0.9974061010915945128;
inline constexpr double sigma2_star_c = 0.0012179724917541098974;
inline constexpr double alpha_star_r = 0.99118774580291762262;
inline constexpr double sigma2_star_r = 0.00018826999609027842693;

// Real sigma2-nullcline at alpha = 0, delta = 3 (closed form).
inline constexpr double f2_r_0_d3 = 0.20897618826953085273;

// Spectral threshold solutions, noiseless (y^2 ~ Exp(delta) density).
inline constexpr double tau_star_endpoint = 0.5 * (1.0 - 1e-9);
inline constexpr double tau_d4 = 0.31267459990314278478;
inline constexpr double alpha0_sq_d4 = 0.60232730879294380482;
inline constexpr double tau_d21 = 0.41021240920503428857;
inline constexpr double alpha0_sq_d21 = 0.32501188731739857974;

// Difference quotients (psi2(1,s2) - psi2(1,0))/s2, complex, delta = 3.
inline constexpr double dq_1em2 = 0.66263211973329351503;
inline constexpr double dq_1em4 = 0.6665876481839183294;
inline constexpr double dq_1em6 = 0.66666549265927382192;
inline constexpr double dq_1em8 = 0.66666665108894222244;

}  // namespace oracle
}  // namespace testsupport

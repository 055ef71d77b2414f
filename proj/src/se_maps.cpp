#include "phaseamp/se_maps.hpp"

#include <cmath>
#include <stdexcept>

#include "phaseamp/elliptic.hpp"
#include "phaseamp/quadrature.hpp"
#include "phaseamp/rng.hpp"

namespace phaseamp {

namespace {

// Below this s the elliptic parameter x = 1/(1+s²) enters the window that
// elliptic_K rejects (within 1e-12 of 1); the profiles are evaluated by
// their s→0 expansions instead.  With s < 2e-6 the dropped O(s⁴ln²s) terms
// are below 1e-21.
constexpr double kSmallS = 2e-6;

// Above this s the closed form (1+s²)E(x) − s²K(x) loses all significance:
// both terms grow like s²·π/2 while their difference stays near π/4, so the
// subtraction leaves only rounding noise once s² ≫ 1/ε.  phi1 switches to
// the binomial expansion of its defining integral there; at s = 64 the
// first dropped term is below 1e-18 relative.
constexpr double kLargeS = 64.0;

void check_s(double s) {
  if (!(s >= 0.0) || !std::isfinite(s)) {
    throw std::domain_error("phi profile: s must be finite and >= 0");
  }
}

void check_state(const SEState& state, const ModelParams& params) {
  validate_params(params);
  validate_state(state, params.field);
  if (state.at_origin()) {
    throw std::domain_error("SE map evaluated at the origin (0,0)");
  }
}

}  // namespace

double phi1(double s) {
  check_s(s);
  if (s < kSmallS) {
    if (s == 0.0) return 1.0;
    return 1.0 - 0.5 * s * s * (std::log(4.0 / s) - 0.5);
  }
  if (s > kLargeS) {
    // Expand (1 + sin²θ/s²)^(-1/2) under ∫₀^{π/2} sin²θ (...) dθ and
    // integrate termwise with Wallis moments; r² underflowing to 0 for
    // astronomically large s degrades gracefully to the π/(4s) leading term.
    const double r = 1.0 / (s * s);
    return M_PI / (4.0 * s) *
           (1.0 +
            r * (-3.0 / 8.0 +
                 r * (15.0 / 64.0 +
                      r * (-175.0 / 1024.0 + r * (2205.0 / 16384.0)))));
  }
  const double s2 = s * s;
  const double x = 1.0 / (1.0 + s2);
  return ((1.0 + s2) * elliptic_E(x) - s2 * elliptic_K(x)) /
         std::sqrt(1.0 + s2);
}

double phi3(double s) {
  check_s(s);
  if (s < kSmallS) {
    if (s == 0.0) return 1.0;
    return 1.0 + 0.5 * s * s * (std::log(4.0 / s) + 0.5);
  }
  const double s2 = s * s;
  return std::sqrt(1.0 + s2) * elliptic_E(1.0 / (1.0 + s2));
}

double phi2(double s) { return phi1(s) + phi3(s); }

double phi1_quadrature(double s, double tol) {
  check_s(s);
  return integrate(
      [s](double t) {
        const double st = std::sin(t);
        return st * st / std::sqrt(st * st + s * s);
      },
      0.0, M_PI / 2.0, tol);
}

double phi3_quadrature(double s, double tol) {
  check_s(s);
  return integrate(
      [s](double t) {
        const double st = std::sin(t);
        return std::sqrt(st * st + s * s);
      },
      0.0, M_PI / 2.0, tol);
}

std::complex<double> psi1(const SEState& state, const ModelParams& params) {
  check_state(state, params);
  const double sigma = std::sqrt(state.sigma2);
  if (params.field == Field::Real) {
    const double a = state.alpha.real();
    if (a == 0.0) return {0.0, 0.0};
    const double v = (sigma == 0.0) ? (a > 0.0 ? 1.0 : -1.0)
                                    : (2.0 / M_PI) * std::atan(a / sigma);
    return {v, 0.0};
  }
  const double mag = std::abs(state.alpha);
  if (mag == 0.0) return {0.0, 0.0};  // ∠0 := 0 convention
  const std::complex<double> phase = state.alpha / mag;
  return phase * phi1(sigma / mag);
}

double psi2(const SEState& state, const ModelParams& params) {
  check_state(state, params);
  const double sigma = std::sqrt(state.sigma2);
  if (params.field == Field::Real) {
    const double a = state.alpha.real();
    const double atn =
        (sigma == 0.0) ? (a > 0.0 ? M_PI / 2.0 : -M_PI / 2.0)
                       : std::atan(a / sigma);
    return (a * a + state.sigma2 + 1.0 - 4.0 * sigma / M_PI -
            (4.0 * a / M_PI) * atn) /
               params.delta +
           params.sigma_w2;
  }
  const double mag = std::abs(state.alpha);
  if (mag == 0.0) {
    return (4.0 / params.delta) *
               (state.sigma2 + 1.0 - (M_PI / 2.0) * sigma) +
           4.0 * params.sigma_w2;
  }
  return (4.0 / params.delta) *
             (mag * mag + state.sigma2 + 1.0 - mag * phi2(sigma / mag)) +
         4.0 * params.sigma_w2;
}

std::complex<double> psi1_quadrature(const SEState& state,
                                     const ModelParams& params, double tol) {
  check_state(state, params);
  if (params.field != Field::Complex) {
    throw std::invalid_argument("psi1_quadrature: complex model only");
  }
  const double mag = std::abs(state.alpha);
  if (mag == 0.0) return {0.0, 0.0};
  const std::complex<double> phase = state.alpha / mag;
  return phase * phi1_quadrature(std::sqrt(state.sigma2) / mag, tol);
}

double psi2_quadrature(const SEState& state, const ModelParams& params,
                       double tol) {
  check_state(state, params);
  if (params.field != Field::Complex) {
    throw std::invalid_argument("psi2_quadrature: complex model only");
  }
  const double sigma = std::sqrt(state.sigma2);
  const double mag = std::abs(state.alpha);
  if (mag == 0.0) {
    return (4.0 / params.delta) *
               (state.sigma2 + 1.0 - (M_PI / 2.0) * sigma) +
           4.0 * params.sigma_w2;
  }
  const double s = sigma / mag;
  const double p2 = phi1_quadrature(s, tol) + phi3_quadrature(s, tol);
  return (4.0 / params.delta) *
             (mag * mag + state.sigma2 + 1.0 - mag * p2) +
         4.0 * params.sigma_w2;
}

double dpsi2_dsigma2(const SEState& state, const ModelParams& params) {
  check_state(state, params);
  const double sigma = std::sqrt(state.sigma2);
  if (params.field == Field::Real) {
    const double a = state.alpha.real();
    if (state.sigma2 == 0.0) {
      if (a == 0.0) {
        throw std::domain_error("dpsi2_dsigma2: undefined at (0,0)");
      }
      return 1.0 / params.delta;  // σ²→0 limit, any α ≠ 0
    }
    return (1.0 - (2.0 / M_PI) * sigma / (a * a + state.sigma2)) /
           params.delta;
  }
  const double mag = std::abs(state.alpha);
  if (state.sigma2 == 0.0) {
    if (std::fabs(mag - 1.0) > 1e-12) {
      throw std::domain_error(
          "dpsi2_dsigma2: sigma2 = 0 is only defined at |alpha| = 1 "
          "(complex model)");
    }
    return 2.0 / params.delta;  // continuity limit at (1, 0)
  }
  if (mag == 0.0) {
    // d/dσ² of (4/δ)(σ² + 1 − (π/2)σ).
    return (4.0 / params.delta) * (1.0 - M_PI / (4.0 * sigma));
  }
  const double s = sigma / mag;
  const double f = elliptic_E(1.0 / (1.0 + s * s)) /
                   (2.0 * std::sqrt(1.0 + s * s));
  return (4.0 / (params.delta * mag)) * (mag - f);
}

MCEstimate psi_mc_oracle(const SEState& state, const ModelParams& params,
                         std::size_t n_samples, std::uint64_t seed) {
  check_state(state, params);
  if (n_samples < 1000) {
    throw std::invalid_argument("psi_mc_oracle: n_samples < 1000");
  }
  const double var = 1.0 / params.delta;
  const double sigma = std::sqrt(state.sigma2);
  Rng rng(seed);

  // Running sums for the two estimators (ψ1 componentwise for complex).
  double s1r = 0.0, s1i = 0.0, s1r2 = 0.0, s1i2 = 0.0;
  double s2 = 0.0, s22 = 0.0;

  if (params.field == Field::Real) {
    const double a = state.alpha.real();
    for (std::size_t k = 0; k < n_samples; ++k) {
      const double z = rng.gaussian(var);
      const double b = rng.gaussian(var);
      const double w =
          params.sigma_w2 > 0.0 ? rng.gaussian(params.sigma_w2) : 0.0;
      const double p = a * z + sigma * b;
      const double v1 = std::copysign(1.0, z) * std::copysign(1.0, p);
      const double d = std::fabs(z) - std::fabs(p) + w;
      const double v2 = d * d;
      s1r += v1;
      s1r2 += v1 * v1;
      s2 += v2;
      s22 += v2 * v2;
    }
  } else {
    const std::complex<double> a = state.alpha;
    for (std::size_t k = 0; k < n_samples; ++k) {
      const std::complex<double> z = rng.complex_gaussian(var);
      const std::complex<double> b = rng.complex_gaussian(var);
      const double w =
          params.sigma_w2 > 0.0 ? rng.gaussian(params.sigma_w2) : 0.0;
      const std::complex<double> p = a * z + sigma * b;
      const double az = std::abs(z);
      const double ap = std::abs(p);
      const std::complex<double> v1 =
          (az > 0.0 && ap > 0.0) ? std::conj(z) * p / (az * ap)
                                 : std::complex<double>(1.0, 0.0);
      const double d = ap - az - w;
      const double v2 = 4.0 * d * d;
      s1r += v1.real();
      s1i += v1.imag();
      s1r2 += v1.real() * v1.real();
      s1i2 += v1.imag() * v1.imag();
      s2 += v2;
      s22 += v2 * v2;
    }
  }

  const double N = static_cast<double>(n_samples);
  MCEstimate est;
  est.n_samples = n_samples;
  const double m1r = s1r / N;
  const double m1i = s1i / N;
  est.psi1_hat = {m1r, m1i};
  const double var1r = std::max(0.0, s1r2 / N - m1r * m1r);
  const double var1i = std::max(0.0, s1i2 / N - m1i * m1i);
  est.stderr1 = std::sqrt((var1r + var1i) / N);
  const double m2 = s2 / N;
  est.psi2_hat = m2;
  est.stderr2 = std::sqrt(std::max(0.0, s22 / N - m2 * m2) / N);
  return est;
}

}  // namespace phaseamp

// State-evolution maps ψ1 and ψ2 for the amplitude-flow AMP in closed form,
// for both the complex and the real measurement model, together with the
// helper profiles
//   φ1(s) = ∫_0^{π/2} sin²θ (sin²θ + s²)^{-1/2} dθ,
//   φ3(s) = ∫_0^{π/2} (sin²θ + s²)^{1/2} dθ,      φ2 = φ1 + φ3,
// the analytic ∂ψ2/∂σ², and a seeded Monte-Carlo estimator of the defining
// expectations that serves as an independent oracle for the closed forms.
//
// Closed forms (α ≠ 0, s = σ/|α|):
//   complex: ψ1 = e^{i∠α} φ1(s)
//            ψ2 = (4/δ)(|α|² + σ² + 1 − |α| φ2(s)) + 4σ_w²
//   real:    ψ1 = (2/π) arctan(α/σ)
//            ψ2 = (1/δ)[α² + σ² + 1 − 4σ/π − (4α/π) arctan(α/σ)] + σ_w²
// The φ profiles reduce to complete elliptic integrals at x = 1/(1+s²):
//   φ1(s) = [(1+s²)E(x) − s²K(x)] / √(1+s²),   φ3(s) = √(1+s²) E(x).

#pragma once

#include <complex>
#include <cstdint>

#include "phaseamp/model.hpp"

namespace phaseamp {

// φ profiles via the elliptic closed forms; strictly monotone on s >= 0,
// φ1(0) = φ3(0) = 1.  Throw on negative or non-finite s.
double phi1(double s);
double phi3(double s);
double phi2(double s);  // φ1 + φ3

// Direct adaptive-quadrature evaluation of the same profiles (verification
// path; slower, independent of the elliptic identities).
double phi1_quadrature(double s, double tol = 1e-12);
double phi3_quadrature(double s, double tol = 1e-12);

// One application of the maps.  ψ1 carries the field type in its complex
// return value (zero imaginary part for the real model); ψ1(0, σ²) = 0 by
// the ∠0 := 0 convention, so α = 0 is an invariant line.
std::complex<double> psi1(const SEState& state, const ModelParams& params);
double psi2(const SEState& state, const ModelParams& params);

// Complex-model maps evaluated by direct quadrature of the defining
// integrals instead of the elliptic closed forms (verification path).
std::complex<double> psi1_quadrature(const SEState& state,
                                     const ModelParams& params,
                                     double tol = 1e-12);
double psi2_quadrature(const SEState& state, const ModelParams& params,
                       double tol = 1e-12);

// Analytic ∂ψ2/∂σ².  Complex: (4/(δ|α|))(|α| − f(s)) with
// f(s) = E(1/(1+s²)) / (2√(1+s²)); continuous at (|α|,σ²)=(1,0) with value
// 2/δ.  Real: (1/δ)(1 − (2/π) σ/(α²+σ²)), with σ²→0 limit 1/δ for α ≠ 0.
// σ² = 0 is rejected except at those documented limit points.
double dpsi2_dsigma2(const SEState& state, const ModelParams& params);

struct MCEstimate {
  std::complex<double> psi1_hat;
  double psi2_hat = 0.0;
  double stderr1 = 0.0;
  double stderr2 = 0.0;
  std::size_t n_samples = 0;
};

// Monte-Carlo estimate of the defining expectations: draws Z, B i.i.d.
// field-Gaussian with variance 1/δ (complex: circularly symmetric), W real
// Gaussian with variance σ_w², forms P = αZ + σB, and averages
//   complex: Z̄P/(|Z||P|)      and  4(|P| − |Z| − W)²
//   real:    sign(ZP)          and  (|Z| − |P| + W)².
// Requires n_samples >= 1000; fully reproducible given (seed, n_samples).
MCEstimate psi_mc_oracle(const SEState& state, const ModelParams& params,
                         std::size_t n_samples, std::uint64_t seed);

}  // namespace phaseamp

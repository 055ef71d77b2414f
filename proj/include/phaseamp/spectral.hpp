// Decoupled spectral initialization (complex model): the optimal
// preprocessing T(y) = (δy² − 1)/(δy² + √δ − 1), the data operator
// D = Aᴴ diag{T(y)} A applied matrix-free, shifted power iteration for the
// eigenvector of the LARGEST SIGNED eigenvalue of D, the τ/τ⋆ solvers built
// on the expectations
//   φ1 = E[(δ|Z|²−1)·u],  φ2 = E[u²],  φ3 = E[(δ|Z|²−1)·u²],
//   u = 2τT(Y)/(1 − 2τT(Y)),  Z ~ CN(0, 1/δ),  Y = |Z| + W,
// the Onsager-consistent fitted values p⁰ = (1 − 2τT(y)) ∘ Ax⁰, and the
// predicted initial overlap |α₀|² = (1 − δφ2)/(1 + δφ3), σ₀² = 1 − |α₀|².

#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "phaseamp/amp.hpp"
#include "phaseamp/model.hpp"

namespace phaseamp {

// How the φ expectations are evaluated: exact 1-D quadrature over
// r = |Z| (density 2δr·e^{−δr²}; noiseless only) or seeded Monte Carlo over
// (Z, W), which also covers σ_w² > 0.
struct ExpectationMethod {
  enum class Kind { Quadrature, MonteCarlo };
  Kind kind = Kind::Quadrature;
  int n_samples = 1000000;    // Monte Carlo only
  std::uint64_t seed = 12345;  // Monte Carlo only
};

struct SpectralConfig {
  double delta = 4.0;     // must exceed 2 (weak-recovery validity guard)
  double sigma_w2 = 0.0;
  double power_tol = 1e-6;
  int power_max_iters = 5000;
  ExpectationMethod method;
};

void validate_spectral_config(const SpectralConfig& cfg);

struct SpectralResult {
  Eigen::VectorXcd x0;  // ρ·v with ‖v‖² = n and ρ = ‖y‖/√n
  Eigen::VectorXcd p0;  // (1 − 2τT(y)) ∘ A x⁰
  double tau = 0.0;
  double tau_star = 0.0;
  double predicted_alpha0_sq = 0.0;
  double predicted_sigma0_sq = 0.0;
};

// Optimal preprocessing.  Requires δ > 1 (denominator positivity at y = 0);
// even in y, with range (−1/(√δ−1), 1).
double preprocess_T(double y, double delta);

// D v = Aᴴ (t_vals ∘ (A v)) without forming D.
Eigen::VectorXcd apply_D(const Eigen::MatrixXcd& A,
                         const Eigen::VectorXd& t_vals,
                         const Eigen::VectorXcd& v);

// Eigenvector of the largest (signed, not largest-magnitude) eigenvalue of
// D, scaled to ‖v‖² = n, phase-fixed so ⟨v, e₁⟩ is real nonnegative.
// Power iteration on D + sI with s = max(0, −min_a t_a)·λ̂_max(AᴴA) + margin
// (λ̂_max from 20 power steps), which makes the shifted operator positive
// semidefinite so the largest signed eigenvalue dominates in magnitude.
// Deterministic all-ones start; converged when successive Rayleigh
// quotients differ by less than power_tol AND the eigenpair residual
// ‖Dv − λv‖/‖v‖ is at most 10·power_tol.  Throws on non-convergence.
Eigen::VectorXcd top_eigvec(const Eigen::MatrixXcd& A,
                            const Eigen::VectorXd& t_vals, int n,
                            const SpectralConfig& cfg);

// φ_k(δ, τ) for k ∈ {1, 2, 3}.  Quadrature requires σ_w² = 0 (the noisy
// expectation is evaluated by seeded Monte Carlo only).  Throws when the
// pole 1 − 2τT(y) ≤ 0 is crossed on the evaluation domain.
double varphi(int k, double delta, double tau, double sigma_w2,
              const ExpectationMethod& method);

struct TauSolution {
  double tau = 0.0;
  double tau_star = 0.0;
};

// τ⋆ solves φ2(δ, τ⋆) = 1/δ on (0, τ_max] with τ_max = ½(1 − 1e-9); in the
// noiseless case φ2 → 1/δ exactly as τ → ½, there is no sign change on the
// open bracket, and the endpoint τ_max is returned (the pole sits at τ = ½
// in the limit).  τ then solves φ1(δ, τ) = 1/δ on (0, τ⋆) by bisection.
// Requires δ > 2; throws when the φ1 bracket fails (δ at the validity edge).
TauSolution solve_tau(double delta, double sigma_w2,
                      const ExpectationMethod& method);

// p⁰ = (1 − 2τT(y)) ∘ (A x⁰), with δ taken from the operator shape
// (δ = m/n).  Throws when any multiplier is not positive (pole guard).
Eigen::VectorXcd corrected_p0(const Eigen::MatrixXcd& A,
                              const Eigen::VectorXcd& x0,
                              const Eigen::VectorXd& y, double tau);

// Closed-form prediction of the decoupled initialization's overlap:
// |α₀|² = (1 − δφ2(τ))/(1 + δφ3(τ)) and σ₀² = 1 − |α₀|².
struct OverlapPrediction {
  double alpha0_sq = 0.0;
  double sigma0_sq = 0.0;
};

OverlapPrediction predict_init_overlap(double delta, double tau,
                                       double sigma_w2,
                                       const ExpectationMethod& method);

// Full pipeline for a complex instance: T(y), leading eigenvector v,
// x⁰ = (‖y‖/√n)·v, (τ, τ⋆), corrected p⁰, and the predicted overlap.
// Computations use the instance's exact aspect ratio m/n; cfg.delta and
// cfg.sigma_w2 must agree with the instance (δ within 0.05, the model's
// guard δ > 2 applying to both).  Deterministic: a fixed instance and
// config reproduce the result bit for bit.  Handing (x0, p0) to run_amp
// (p0_override) continues the decoupled pipeline.
SpectralResult spectral_initialize(const MeasurementInstance& inst,
                                   const SpectralConfig& cfg);

}  // namespace phaseamp

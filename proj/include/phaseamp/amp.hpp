// Finite-n AMP.A solver: measurement-instance generation, the complex and
// real iterations with their Onsager memory terms, the smoothed variant, the
// ridge-damped (μ-regularized) real iteration, and the empirical overlap /
// variance / phase-aligned-MSE measurements that state evolution predicts.
//
// Complex iteration:  p^t    = A x^t − (2/δ) g(p^{t−1}, y)
//                     x^{t+1} = 2 [ (−div_t) x^t + Aᴴ g(p^t, y) ]
// Real iteration:     p^t    = A x^t − (1/δ) g(p^{t−1}, y)
//                     x^{t+1} =     (−div_t) x^t + Aᵀ g(p^t, y)
// with g(p,y) = y·p/|p| − p (complex), y·sign(p) − p (real), g(p^{−1},y)=0,
// and div_t the empirical mean of ∂g/∂p over the m coordinates of p^t.

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

#include "phaseamp/model.hpp"

namespace phaseamp {

enum class SignalDist { Gaussian, NonnegUniform };

// Instance recipe.  complex_noise draws w ~ CN(0, sigma_w2) and adds its
// real part to |Ax*| (an exploration switch; y stays real, effective added
// variance sigma_w2/2).  The default adds real N(0, sigma_w2) noise, which
// is the convention every state-evolution comparison assumes.
struct ModelConfig {
  ModelParams params;
  int n = 256;
  SignalDist signal = SignalDist::Gaussian;  // NonnegUniform: real field only
  bool complex_noise = false;
  std::uint64_t seed = 1;
};

// A drawn instance y = |A x*| + w.  Exactly one of the (A_cplx, x_star_cplx)
// / (A_real, x_star_real) pairs is populated, matching config.params.field;
// y is always real.  ‖x*‖² = n exactly (up to rounding) after rescale.
struct MeasurementInstance {
  ModelConfig config;
  int n = 0;
  int m = 0;
  Eigen::MatrixXcd A_cplx;
  Eigen::VectorXcd x_star_cplx;
  Eigen::MatrixXd A_real;
  Eigen::VectorXd x_star_real;
  Eigen::VectorXd y;

  Field field() const { return config.params.field; }
  double delta() const { return config.params.delta; }
};

// Draws A (i.i.d. field-Gaussian entries of variance 1/m), x* (configured
// signal law, rescaled to ‖x*‖² = n), and w, each from an independent
// substream of config.seed, so equal seeds give bit-identical instances.
// Requires n ≥ 16 and δ > 0; m = round(δ·n).
MeasurementInstance generate_instance(const ModelConfig& config);

// Sensing-operator application.  Every solver touches A only through these
// four functions (matvec with A and its adjoint/transpose), so a matrix-free
// operator for large n needs to replace just this seam.
Eigen::VectorXcd apply_A(const MeasurementInstance& inst,
                         const Eigen::VectorXcd& v);
Eigen::VectorXcd apply_AH(const MeasurementInstance& inst,
                          const Eigen::VectorXcd& v);
Eigen::VectorXd apply_A(const MeasurementInstance& inst,
                        const Eigen::VectorXd& v);
Eigen::VectorXd apply_AH(const MeasurementInstance& inst,
                         const Eigen::VectorXd& v);

// The residual nonlinearity, applied componentwise.  epsilon = 0 gives the
// exact g with the conventions p/|p| := 1 at p = 0 (complex) and
// sign(0) := +1 (real); epsilon > 0 gives the smoothed variant
// y·p/sqrt(|p|² + ε) − p.
Eigen::VectorXcd g_amp(const Eigen::VectorXcd& p, const Eigen::VectorXd& y,
                       double epsilon);
Eigen::VectorXd g_amp(const Eigen::VectorXd& p, const Eigen::VectorXd& y,
                      double epsilon);

// Empirical divergence (1/m) Σ_a ∂g(p_a, y_a)/∂p_a.
//   complex, ε = 0:  (1/m) Σ y_a / (2·max(|p_a|, 1e-12)) − 1
//   complex, ε > 0:  (1/m) Σ y_a (|p_a|²/2 + ε)/(|p_a|² + ε)^{3/2} − 1
//   real,    ε > 0:  (1/m) Σ y_a ε/(p_a² + ε)^{3/2} − 1
// The exact real divergence carries a point mass at p = 0 and is not
// offered: the real overload throws for ε ≤ 0.
double divergence_p(const Eigen::VectorXcd& p, const Eigen::VectorXd& y,
                    double epsilon);
double divergence_p(const Eigen::VectorXd& p, const Eigen::VectorXd& y,
                    double epsilon);

// Iterate state.  The field-matching members mirror MeasurementInstance;
// g_prev holds g(p^{t−1}, y) (zero at t = 0), p holds p^{t−1} on entry to
// step t, divergence records the div_t used to build the stored x, and tau
// is the ridge-damping state of the general (μ-regularized) mode.
struct AMPState {
  Eigen::VectorXcd x_cplx;
  Eigen::VectorXcd p_cplx;
  Eigen::VectorXcd g_prev_cplx;
  Eigen::VectorXd x_real;
  Eigen::VectorXd p_real;
  Eigen::VectorXd g_prev_real;
  double tau = 0.0;
  double divergence = 0.0;
  int t = 0;
};

// Wraps a starting estimate x⁰ into a t = 0 state (g_prev = 0).
AMPState make_initial_state(const MeasurementInstance& inst,
                            const Eigen::VectorXcd& x0);
AMPState make_initial_state(const MeasurementInstance& inst,
                            const Eigen::VectorXd& x0);

// x⁰ = α₀ x* + σ₀ h with h a fresh i.i.d. unit-variance field-Gaussian
// drawn from `seed` (independent of A and w by construction), so the
// measured (α̂₀, σ̂₀²) concentrate on (α₀, σ₀²) at rate 1/√n.
// Requires α₀² + σ₀² > 0.
AMPState make_informative_init(const MeasurementInstance& inst, double alpha0,
                               double sigma0_sq, std::uint64_t seed);

// One plain AMP.A step (field chosen by the instance).  At t = 0 the fitted
// values are p⁰ = A x⁰ exactly.  For the real field epsilon must be > 0
// (the divergence estimator requires smoothing).
AMPState amp_step(const AMPState& state, const MeasurementInstance& inst,
                  double epsilon);

// Ridge-damped real-field step: the plain real iteration with damping
//   λ_t = (−div_t) / ((−div_t) + μ(τ_t + 1/2)),
//   τ^t = (1/δ)(τ^{t−1} + 1/2)/(−div_{t−1}) · λ_{t−1},
// applied as  p^t = A x^t − (1/δ) λ_{t−1} g(p^{t−1}, y)  and
// x^{t+1} = λ_t [ (−div_t) x^t + Aᵀ g(p^t, y) ].  Initialization takes
// λ_{−1} = 1 (its μ = 0 value) and τ^{−1} = −1/2, so τ_0 = 0 and damping is
// active from λ_0 on.  μ = 0 makes every λ equal to 1.0 and reproduces
// amp_step bit for bit.  Throws when a measured −div is not positive
// (divergence-estimate breakdown) or when the instance is complex.
AMPState amp_step_general(const AMPState& state,
                          const MeasurementInstance& inst, double mu,
                          double epsilon);

// Empirical counterparts of the state-evolution coordinates plus the
// phase-aligned mean square error:
//   α̂  = ⟨x*, x⟩ / ‖x*‖²   (field-typed; conjugated inner product)
//   σ̂² = ‖x − α̂ x*‖² / ‖x*‖²
//   amse = ‖x − e^{iθ} x*‖² / n,  θ = ∠⟨x*, x⟩ (sign in the real field;
//          θ := 0 when the inner product vanishes)
struct Measurement {
  std::complex<double> alpha_hat{0.0, 0.0};
  double sigma2_hat = 0.0;
  double amse = 0.0;
};

Measurement measure(const AMPState& state, const MeasurementInstance& inst);

// Per-iteration record of a run; row k describes x^k (divergence[k] is the
// div used to build x^k, 0.0 for the initial row).  truncated is set when a
// non-finite state appeared; the trace then stops at the last finite row.
struct AMPTrace {
  std::vector<std::complex<double>> alpha_hat;
  std::vector<double> sigma2_hat;
  std::vector<double> amse;
  std::vector<double> divergence;
  bool truncated = false;

  std::size_t size() const { return alpha_hat.size(); }
};

// Runs `iters` plain steps from `init`, measuring each state (the initial
// one included).  p0_override, when non-null, seeds the t = 0 fitted values
// with a precomputed p⁰ in place of A x⁰ — the handoff used by the
// decoupled spectral initialization (complex field only).
AMPTrace run_amp(const MeasurementInstance& inst, const AMPState& init,
                 int iters, double epsilon,
                 const Eigen::VectorXcd* p0_override = nullptr);

}  // namespace phaseamp

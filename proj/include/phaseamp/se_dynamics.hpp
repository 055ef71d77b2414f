// The state-evolution dynamical system built on the ψ maps: nullclines
// F1/F1⁻¹ (fixed points of ψ1 in α) and F2 (fixed point of ψ2 in σ²), the
// lower boundary L(α;δ) that every post-first-iteration state respects,
// region classification, trajectory iteration with convergence verdicts,
// basin-of-attraction grids, phase-transition scans over δ, the noisy fixed
// point (α⋆, σ⋆²), and high-SNR noise-sensitivity slopes.

#pragma once

#include <cstdint>
#include <vector>

#include "phaseamp/model.hpp"

namespace phaseamp {

// Critical oversampling ratios of the SE dynamics: above delta_amp every
// informative start succeeds; delta_global is where the success fixed point
// (1,0) turns locally attracting.
struct Thresholds {
  double delta_amp;
  double delta_global;
  Field field;
};
Thresholds thresholds(Field field);

// Upper bound max{1, 4/δ} on σ² for bounded complex trajectories (also the
// domain cap of the complex region chart).
double sigma2_max(double delta);

// Inverse of φ1 on (0, 1]: the s >= 0 with φ1(s) = target.  The bracket
// upper end grows geometrically (φ1 decays like π/(4s)).
double phi1_inverse(double target, double tol = 1e-13);

// The α-nullcline expressed as σ² = F1⁻¹(α): the largest residual variance
// at which overlap α is a fixed point of α ↦ ψ1(α, σ²).
//   real:    α² cot²(πα/2)          complex: α² (φ1⁻¹(α))²
// F1⁻¹(1) = 0; α = 0 is accepted and returns the continuous extension
// (4/π² real, π²/16 complex).  Strictly decreasing.
double F1_inverse(double alpha, Field field);

struct F1Result {
  double alpha = 0.0;
  bool extinct = false;  // σ² at/beyond the extinction threshold
};

// The unique positive fixed point of α ↦ ψ1(α, σ²), or extinct when σ²
// reaches the threshold (4/π² real, π²/16 complex) where only α=0 remains.
F1Result F1(double sigma2, Field field);

// The unique attracting fixed point of σ² ↦ ψ2(α, σ²; δ, σ_w²); requires
// δ > δ_global for the field.
double F2(double alpha, const ModelParams& params);

// Lower boundary of the reachable set:
//   complex: (4/δ)(1 − φ2²(φ1⁻¹(α)) / (4(1+(φ1⁻¹(α))²)))
//   real:    (1/δ)(1 − [(2/π)cos(πα/2) + α sin(πα/2)]²)
// Strictly decreasing in α; L(1;δ) = 0; α = 0 returns the closed limit.
double L_boundary(double alpha, double delta, Field field);

enum class RegionTag { R0, R1, R2a, R2b, OutOfDomain };

struct RegionLabel {
  RegionTag tag;
};

// Region chart of the dynamics at overlap a = |α| ∈ (0,1]:
//   R0:  σ² above the extinction ceiling (π²/16 complex — capped at
//        σ²_max = max{1,4/δ} beyond which OutOfDomain; 4/π² real, unbounded)
//   R1:  F1⁻¹(a) < σ² <= ceiling
//   R2a: L(a;δ) <= σ² <= F1⁻¹(a)
//   R2b: σ² < L(a;δ)
// The half-open conventions make boundary membership deterministic.
RegionLabel classify_region(const SEState& state, double delta, Field field);

// One application of (ψ1, ψ2).
SEState se_step(const SEState& state, const ModelParams& params);

enum class Verdict {
  ConvergedSuccess,   // |1 − |α|| < tol and σ² < tol²
  ConvergedNoisyFP,   // successive move < 1e-14 with σ_w² > 0
  Stalled,            // successive move < 1e-14, noiseless, not success
  MaxIters
};

struct Trajectory {
  std::vector<SEState> states;  // states[0] = init; bit-exact se_step chain
  Verdict verdict = Verdict::MaxIters;
  std::size_t iterations_used = 0;
};

Trajectory se_trajectory(const SEState& init, const ModelParams& params,
                         std::size_t max_iters = 10000, double tol = 1e-6);

struct BasinGrid {
  std::size_t grid_n = 0;
  std::vector<double> alpha0;      // grid_n values in (0, 1]
  std::vector<double> sigma0_sq;   // grid_n values in [0, 1]
  std::vector<std::uint8_t> success;  // row-major [j * grid_n + i]

  bool cell(std::size_t i, std::size_t j) const {
    return success[j * grid_n + i] != 0;
  }
  double success_fraction() const;
};

// Success verdicts of se_trajectory over an equispaced grid of
// (α₀, σ₀²) ∈ (0,1] × [0,1].
BasinGrid se_basin_grid(const ModelParams& params, std::size_t grid_n,
                        std::size_t max_iters = 10000, double tol = 1e-6);

// Bisect δ on the success/failure verdict of se_trajectory from init; the
// range must straddle the flip (lo fails, hi succeeds).
double phase_transition_scan(Field field, double delta_lo, double delta_hi,
                             std::size_t steps, const SEState& init,
                             std::size_t max_iters = 10000, double tol = 1e-6);

// The unique informative fixed point (α⋆, σ⋆²) of the noisy SE, solving
// F1⁻¹(α) = F2(α; δ, σ_w²).  Requires δ > δ_AMP(field) and σ_w² <= 1e-2
// (the analysis is a small-noise statement; the guard is conservative).
SEState noisy_fixed_point(const ModelParams& params);

// Mean-square error predicted for a state after optimal phase alignment.
double se_predicted_amse(const SEState& state);

struct NoiseSensitivity {
  double sigma_w2[3] = {1e-4, 1e-5, 1e-6};
  double slope[3] = {0.0, 0.0, 0.0};  // AMSE(σ_w²)/σ_w² at each level
  double slope_extrapolated = 0.0;    // linear-in-σ_w² extrapolation to 0
  double slope_closed_form = 0.0;     // 4/(1−2/δ) cx, 1/((1+4/π²)⁻¹−1/δ) re
};

// High-SNR slope of AMSE/σ_w² from noisy fixed points vs the closed form.
NoiseSensitivity noise_sensitivity(double delta, Field field);

}  // namespace phaseamp

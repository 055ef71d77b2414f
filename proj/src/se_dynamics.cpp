#include "phaseamp/se_dynamics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "phaseamp/rootfind.hpp"
#include "phaseamp/se_maps.hpp"

namespace phaseamp {

namespace {

constexpr double kMoveEps = 1e-14;  // successive-move stagnation threshold

double extinction_ceiling(Field field) {
  return field == Field::Complex ? M_PI * M_PI / 16.0 : 4.0 / (M_PI * M_PI);
}

void check_alpha_range(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("alpha outside [0,1]: " +
                                std::to_string(alpha));
  }
}

}  // namespace

Thresholds thresholds(Field field) {
  if (field == Field::Complex) {
    return {64.0 / (M_PI * M_PI) - 4.0, 2.0, field};
  }
  return {M_PI * M_PI / 4.0 - 1.0, 1.0 + 4.0 / (M_PI * M_PI), field};
}

double sigma2_max(double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("sigma2_max: delta <= 0");
  return std::max(1.0, 4.0 / delta);
}

double phi1_inverse(double target, double tol) {
  if (!(target > 0.0 && target <= 1.0)) {
    throw std::invalid_argument("phi1_inverse: target outside (0,1]");
  }
  if (target == 1.0) return 0.0;
  double s_max = 16.0;
  while (phi1(s_max) >= target) s_max *= 2.0;  // φ1 ~ π/(4s): terminates
  return bisect([target](double s) { return phi1(s) - target; }, 0.0, s_max,
                tol);
}

double F1_inverse(double alpha, Field field) {
  check_alpha_range(alpha);
  if (alpha == 0.0) return extinction_ceiling(field);  // continuous extension
  if (alpha == 1.0) return 0.0;
  if (field == Field::Real) {
    const double c = 1.0 / std::tan(M_PI * alpha / 2.0);
    return alpha * alpha * c * c;
  }
  const double s = phi1_inverse(alpha);
  return alpha * alpha * s * s;
}

F1Result F1(double sigma2, Field field) {
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("F1: sigma2 < 0");
  if (sigma2 >= extinction_ceiling(field)) return {0.0, true};
  if (sigma2 == 0.0) return {1.0, false};
  ModelParams params{/*delta=*/2.0, /*sigma_w2=*/0.0, field};  // ψ1 ignores δ
  const auto h = [&](double a) {
    return psi1(SEState(a, sigma2), params).real() - a;
  };
  // ψ1 is concave in α with slope > 1 at 0 below the ceiling, so h > 0 just
  // right of 0 and h(1) < 0 for σ² > 0.
  const double a = bisect(h, 1e-14, 1.0, 1e-13);
  return {a, false};
}

double F2(double alpha, const ModelParams& params) {
  check_alpha_range(alpha);
  validate_params(params);
  const double dg = thresholds(params.field).delta_global;
  if (!(params.delta > dg)) {
    throw std::invalid_argument("F2: requires delta > delta_global");
  }
  const auto h = [&](double s2) {
    return psi2(SEState(alpha, s2), params) - s2;
  };
  // The variance map is undefined at the exact origin, and at α = 0 its
  // σ²→0⁺ limit is 4/δ (complex) or 1/δ (real), strictly positive — so the
  // bracket starts just above zero instead of at it.
  const double lo = alpha == 0.0 ? std::numeric_limits<double>::min() : 0.0;
  double hi;
  if (params.field == Field::Complex) {
    hi = sigma2_max(params.delta) + 4.0 * params.sigma_w2;
    if (alpha > 0.0 && h(0.0) == 0.0) return 0.0;  // α=1, noiseless
    if (h(hi) > 0.0) {
      // The analytic bracket can be tight at the boundary; grow once before
      // declaring the regime invalid.
      double grown = 2.0 * hi;
      while (h(grown) > 0.0 && grown < 1e6) grown *= 2.0;
      if (h(grown) > 0.0) {
        throw std::runtime_error("F2: no sign change in bracket");
      }
      hi = grown;
    }
  } else {
    hi = 1.0;
    while (h(hi) > 0.0 && hi < 1e6) hi *= 2.0;
    if (h(hi) > 0.0) throw std::runtime_error("F2: no sign change in bracket");
    if (alpha > 0.0 && h(0.0) == 0.0) return 0.0;
  }
  return bisect(h, lo, hi, 1e-13);
}

double L_boundary(double alpha, double delta, Field field) {
  check_alpha_range(alpha);
  if (!(delta > 0.0)) throw std::invalid_argument("L_boundary: delta <= 0");
  if (field == Field::Real) {
    const double b = (2.0 / M_PI) * std::cos(M_PI * alpha / 2.0) +
                     alpha * std::sin(M_PI * alpha / 2.0);
    return (1.0 - b * b) / delta;
  }
  if (alpha == 0.0) {
    return (4.0 / delta) * (1.0 - M_PI * M_PI / 16.0);  // closed limit
  }
  const double s = phi1_inverse(alpha);
  const double p2 = phi2(s);
  return (4.0 / delta) * (1.0 - p2 * p2 / (4.0 * (1.0 + s * s)));
}

RegionLabel classify_region(const SEState& state, double delta, Field field) {
  validate_state(state, field);
  const double a =
      field == Field::Complex ? std::abs(state.alpha) : state.alpha.real();
  if (!(a > 0.0 && a <= 1.0)) {
    throw std::invalid_argument("classify_region: alpha outside (0,1]");
  }
  const double s2 = state.sigma2;
  const double ceiling = extinction_ceiling(field);
  if (field == Field::Complex && s2 > sigma2_max(delta)) {
    return {RegionTag::OutOfDomain};
  }
  if (s2 > ceiling) return {RegionTag::R0};
  const double f1i = F1_inverse(a, field);
  if (s2 > f1i) return {RegionTag::R1};
  if (s2 >= L_boundary(a, delta, field)) return {RegionTag::R2a};
  return {RegionTag::R2b};
}

SEState se_step(const SEState& state, const ModelParams& params) {
  return SEState(psi1(state, params), psi2(state, params));
}

Trajectory se_trajectory(const SEState& init, const ModelParams& params,
                         std::size_t max_iters, double tol) {
  validate_params(params);
  validate_state(init, params.field);
  if (init.at_origin()) {
    throw std::invalid_argument("se_trajectory: init at origin");
  }
  if (max_iters < 1) throw std::invalid_argument("se_trajectory: max_iters");

  Trajectory traj;
  traj.states.reserve(std::min<std::size_t>(max_iters + 1, 1 << 14));
  traj.states.push_back(init);
  SEState cur = init;
  for (std::size_t t = 0; t < max_iters; ++t) {
    const SEState next = se_step(cur, params);
    traj.states.push_back(next);
    traj.iterations_used = t + 1;
    if (std::fabs(1.0 - std::abs(next.alpha)) < tol &&
        next.sigma2 < tol * tol) {
      traj.verdict = Verdict::ConvergedSuccess;
      return traj;
    }
    const double move =
        std::abs(next.alpha - cur.alpha) + std::fabs(next.sigma2 - cur.sigma2);
    if (move < kMoveEps) {
      traj.verdict = params.sigma_w2 > 0.0 ? Verdict::ConvergedNoisyFP
                                           : Verdict::Stalled;
      return traj;
    }
    cur = next;
  }
  traj.verdict = Verdict::MaxIters;
  return traj;
}

double BasinGrid::success_fraction() const {
  if (success.empty()) return 0.0;
  std::size_t k = 0;
  for (auto v : success) k += (v != 0);
  return static_cast<double>(k) / static_cast<double>(success.size());
}

BasinGrid se_basin_grid(const ModelParams& params, std::size_t grid_n,
                        std::size_t max_iters, double tol) {
  if (grid_n < 2) throw std::invalid_argument("se_basin_grid: grid_n < 2");
  BasinGrid grid;
  grid.grid_n = grid_n;
  grid.alpha0.resize(grid_n);
  grid.sigma0_sq.resize(grid_n);
  for (std::size_t i = 0; i < grid_n; ++i) {
    grid.alpha0[i] = static_cast<double>(i + 1) / static_cast<double>(grid_n);
    grid.sigma0_sq[i] =
        static_cast<double>(i) / static_cast<double>(grid_n - 1);
  }
  grid.success.assign(grid_n * grid_n, 0);
  for (std::size_t j = 0; j < grid_n; ++j) {
    for (std::size_t i = 0; i < grid_n; ++i) {
      const Trajectory traj = se_trajectory(
          SEState(grid.alpha0[i], grid.sigma0_sq[j]), params, max_iters, tol);
      grid.success[j * grid_n + i] =
          traj.verdict == Verdict::ConvergedSuccess ? 1 : 0;
    }
  }
  return grid;
}

double phase_transition_scan(Field field, double delta_lo, double delta_hi,
                             std::size_t steps, const SEState& init,
                             std::size_t max_iters, double tol) {
  if (!(delta_lo > 0.0 && delta_lo < delta_hi)) {
    throw std::invalid_argument("phase_transition_scan: bad delta range");
  }
  const auto succeeds = [&](double delta) {
    ModelParams params{delta, 0.0, field};
    return se_trajectory(init, params, max_iters, tol).verdict ==
           Verdict::ConvergedSuccess;
  };
  if (succeeds(delta_lo) || !succeeds(delta_hi)) {
    throw std::runtime_error(
        "phase_transition_scan: verdict does not flip in range");
  }
  double lo = delta_lo, hi = delta_hi;
  for (std::size_t k = 0; k < steps; ++k) {
    const double mid = 0.5 * (lo + hi);
    (succeeds(mid) ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

SEState noisy_fixed_point(const ModelParams& params) {
  validate_params(params);
  const Thresholds th = thresholds(params.field);
  if (!(params.delta > th.delta_amp)) {
    throw std::invalid_argument("noisy_fixed_point: requires delta > delta_amp");
  }
  if (params.sigma_w2 > 1e-2) {
    throw std::invalid_argument(
        "noisy_fixed_point: sigma_w2 > 1e-2 outside the small-noise regime");
  }
  if (params.sigma_w2 == 0.0) return SEState(1.0, 0.0);

  const auto h = [&](double a) {
    return F1_inverse(a, params.field) - F2(a, params);
  };
  // For δ > δ_AMP the noiseless curves are strictly separated
  // (F1⁻¹ > F2); small noise lifts F2 by O(σ_w²), so h > 0 persists in the
  // interior while h < 0 near α = 1 where F1⁻¹ vanishes quadratically.
  double lo = 0.5;
  while (h(lo) <= 0.0 && lo > 1e-6) lo /= 2.0;
  if (h(lo) <= 0.0) {
    throw std::runtime_error("noisy_fixed_point: no root in (0,1)");
  }
  const double hi = 1.0 - 1e-12;
  if (h(hi) >= 0.0) {
    throw std::runtime_error("noisy_fixed_point: no root in (0,1)");
  }
  const double a_star = bisect(h, lo, hi, 1e-13);
  return SEState(a_star, F1_inverse(a_star, params.field));
}

double se_predicted_amse(const SEState& state) {
  const double d = 1.0 - std::abs(state.alpha);
  return d * d + state.sigma2;
}

NoiseSensitivity noise_sensitivity(double delta, Field field) {
  const Thresholds th = thresholds(field);
  if (!(delta > th.delta_amp)) {
    throw std::invalid_argument("noise_sensitivity: requires delta > delta_amp");
  }
  NoiseSensitivity ns;
  ns.slope_closed_form =
      field == Field::Complex
          ? 4.0 / (1.0 - 2.0 / delta)
          : 1.0 / (1.0 / (1.0 + 4.0 / (M_PI * M_PI)) - 1.0 / delta);
  for (int k = 0; k < 3; ++k) {
    ModelParams params{delta, ns.sigma_w2[k], field};
    const SEState fp = noisy_fixed_point(params);
    ns.slope[k] = se_predicted_amse(fp) / ns.sigma_w2[k];
  }
  // AMSE/σ_w² = S + O(σ_w²): extrapolate linearly from the two smallest.
  const double r = ns.sigma_w2[2] / (ns.sigma_w2[1] - ns.sigma_w2[2]);
  ns.slope_extrapolated = ns.slope[2] + (ns.slope[2] - ns.slope[1]) * r;
  return ns;
}

}  // namespace phaseamp

#include "phaseamp/amp.hpp"

#include <cmath>
#include <stdexcept>

#include "phaseamp/rng.hpp"

namespace phaseamp {

namespace {

// Seed-substream indices; one independent stream per drawn component.
constexpr std::uint64_t kStreamA = 0;
constexpr std::uint64_t kStreamSignal = 1;
constexpr std::uint64_t kStreamNoise = 2;
constexpr std::uint64_t kStreamInit = 3;

// |p| floor in the unsmoothed complex divergence: p = 0 is a measure-zero
// event at finite n, the floor only prevents overflow.
constexpr double kAbsFloor = 1e-12;

void check_instance_config(const ModelConfig& config) {
  validate_params(config.params);
  if (config.n < 16) {
    throw std::invalid_argument("generate_instance: n < 16");
  }
  if (config.signal == SignalDist::NonnegUniform &&
      config.params.field == Field::Complex) {
    throw std::invalid_argument(
        "generate_instance: nonnegative-uniform signal is real-field only");
  }
}

// Adds measurement noise to the magnitudes; y stays real under both noise
// conventions (see ModelConfig::complex_noise).
Eigen::VectorXd add_noise(const Eigen::VectorXd& magnitudes,
                          const ModelConfig& config) {
  Eigen::VectorXd y = magnitudes;
  if (config.params.sigma_w2 > 0.0) {
    Rng rng(derive_seed(config.seed, kStreamNoise));
    for (Eigen::Index a = 0; a < y.size(); ++a) {
      if (config.complex_noise) {
        y[a] += rng.complex_gaussian(config.params.sigma_w2).real();
      } else {
        y[a] += rng.gaussian(config.params.sigma_w2);
      }
    }
  }
  return y;
}

bool state_is_finite(const AMPState& state, Field field) {
  if (field == Field::Complex) {
    return state.x_cplx.allFinite() && state.p_cplx.allFinite();
  }
  return state.x_real.allFinite() && state.p_real.allFinite();
}

// One complex step; p_override, when non-null, replaces the fitted-value
// update (used to seed t = 0 with a spectral p⁰).
AMPState step_complex(const AMPState& state, const MeasurementInstance& inst,
                      double epsilon, const Eigen::VectorXcd* p_override) {
  if (state.x_cplx.size() != inst.n) {
    throw std::invalid_argument("amp_step: state/instance dimension mismatch");
  }
  AMPState next;
  if (p_override != nullptr) {
    next.p_cplx = *p_override;
  } else {
    next.p_cplx = apply_A(inst, state.x_cplx) -
                  (2.0 / inst.delta()) * state.g_prev_cplx;
  }
  const Eigen::VectorXcd g = g_amp(next.p_cplx, inst.y, epsilon);
  const double div = divergence_p(next.p_cplx, inst.y, epsilon);
  next.x_cplx = 2.0 * ((-div) * state.x_cplx + apply_AH(inst, g));
  next.g_prev_cplx = g;
  next.tau = state.tau;
  next.divergence = div;
  next.t = state.t + 1;
  return next;
}

// One real step, damped by the scalars lambda_prev (inside the Onsager
// term) and lambda_next (on the whole estimate update); both are exactly
// 1.0 in the plain iteration, so the damped and plain code paths are the
// same floating-point computation there.
AMPState step_real_damped(const AMPState& state,
                          const MeasurementInstance& inst, double epsilon,
                          double lambda_prev, double tau_next, double mu) {
  AMPState next;
  next.p_real = apply_A(inst, state.x_real) -
                (lambda_prev / inst.delta()) * state.g_prev_real;
  const Eigen::VectorXd g = g_amp(next.p_real, inst.y, epsilon);
  const double div = divergence_p(next.p_real, inst.y, epsilon);
  double lambda_next = 1.0;
  if (mu > 0.0) {
    if (!(-div > 0.0)) {
      throw std::runtime_error(
          "amp_step_general: divergence-estimate breakdown (-div <= 0)");
    }
    lambda_next = (-div) / ((-div) + mu * (tau_next + 0.5));
  }
  next.x_real =
      lambda_next * ((-div) * state.x_real + apply_AH(inst, g));
  next.g_prev_real = g;
  next.tau = tau_next;
  next.divergence = div;
  next.t = state.t + 1;
  return next;
}

}  // namespace

MeasurementInstance generate_instance(const ModelConfig& config) {
  check_instance_config(config);
  MeasurementInstance inst;
  inst.config = config;
  inst.n = config.n;
  inst.m = static_cast<int>(std::llround(config.params.delta * config.n));
  if (inst.m < 1) {
    throw std::invalid_argument("generate_instance: m = round(delta*n) < 1");
  }
  const int n = inst.n;
  const int m = inst.m;

  Rng rng_a(derive_seed(config.seed, kStreamA));
  Rng rng_x(derive_seed(config.seed, kStreamSignal));
  const double entry_var = 1.0 / static_cast<double>(m);

  if (config.params.field == Field::Complex) {
    inst.A_cplx.resize(m, n);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < m; ++i) {
        inst.A_cplx(i, j) = rng_a.complex_gaussian(entry_var);
      }
    }
    inst.x_star_cplx.resize(n);
    for (int i = 0; i < n; ++i) {
      inst.x_star_cplx[i] = rng_x.complex_gaussian(1.0);
    }
    inst.x_star_cplx *=
        std::sqrt(static_cast<double>(n) / inst.x_star_cplx.squaredNorm());
    inst.y = add_noise((inst.A_cplx * inst.x_star_cplx).cwiseAbs(), config);
  } else {
    inst.A_real.resize(m, n);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < m; ++i) {
        inst.A_real(i, j) = rng_a.gaussian(entry_var);
      }
    }
    inst.x_star_real.resize(n);
    for (int i = 0; i < n; ++i) {
      if (config.signal == SignalDist::NonnegUniform) {
        // U[0, √3) has unit second moment; the rescale below pins ‖x*‖² = n.
        inst.x_star_real[i] = rng_x.uniform(0.0, std::sqrt(3.0));
      } else {
        inst.x_star_real[i] = rng_x.gaussian(1.0);
      }
    }
    inst.x_star_real *=
        std::sqrt(static_cast<double>(n) / inst.x_star_real.squaredNorm());
    inst.y = add_noise((inst.A_real * inst.x_star_real).cwiseAbs(), config);
  }
  return inst;
}

Eigen::VectorXcd apply_A(const MeasurementInstance& inst,
                         const Eigen::VectorXcd& v) {
  return inst.A_cplx * v;
}

Eigen::VectorXcd apply_AH(const MeasurementInstance& inst,
                          const Eigen::VectorXcd& v) {
  return inst.A_cplx.adjoint() * v;
}

Eigen::VectorXd apply_A(const MeasurementInstance& inst,
                        const Eigen::VectorXd& v) {
  return inst.A_real * v;
}

Eigen::VectorXd apply_AH(const MeasurementInstance& inst,
                         const Eigen::VectorXd& v) {
  return inst.A_real.transpose() * v;
}

Eigen::VectorXcd g_amp(const Eigen::VectorXcd& p, const Eigen::VectorXd& y,
                       double epsilon) {
  if (p.size() != y.size()) {
    throw std::invalid_argument("g_amp: dimension mismatch");
  }
  Eigen::VectorXcd g(p.size());
  for (Eigen::Index a = 0; a < p.size(); ++a) {
    const double ap = std::abs(p[a]);
    if (epsilon > 0.0) {
      g[a] = y[a] * p[a] / std::sqrt(ap * ap + epsilon) - p[a];
    } else if (ap == 0.0) {
      g[a] = std::complex<double>(y[a], 0.0);  // direction convention p/|p|:=1
    } else {
      g[a] = y[a] * p[a] / ap - p[a];
    }
  }
  return g;
}

Eigen::VectorXd g_amp(const Eigen::VectorXd& p, const Eigen::VectorXd& y,
                      double epsilon) {
  if (p.size() != y.size()) {
    throw std::invalid_argument("g_amp: dimension mismatch");
  }
  Eigen::VectorXd g(p.size());
  for (Eigen::Index a = 0; a < p.size(); ++a) {
    if (epsilon > 0.0) {
      g[a] = y[a] * p[a] / std::sqrt(p[a] * p[a] + epsilon) - p[a];
    } else {
      const double sign = (p[a] < 0.0) ? -1.0 : 1.0;  // sign(0) := +1
      g[a] = y[a] * sign - p[a];
    }
  }
  return g;
}

double divergence_p(const Eigen::VectorXcd& p, const Eigen::VectorXd& y,
                    double epsilon) {
  if (p.size() != y.size()) {
    throw std::invalid_argument("divergence_p: dimension mismatch");
  }
  double sum = 0.0;
  for (Eigen::Index a = 0; a < p.size(); ++a) {
    const double ap2 = std::norm(p[a]);
    if (epsilon > 0.0) {
      sum += y[a] * (0.5 * ap2 + epsilon) / std::pow(ap2 + epsilon, 1.5);
    } else {
      sum += y[a] / (2.0 * std::max(std::sqrt(ap2), kAbsFloor));
    }
  }
  return sum / static_cast<double>(p.size()) - 1.0;
}

double divergence_p(const Eigen::VectorXd& p, const Eigen::VectorXd& y,
                    double epsilon) {
  if (p.size() != y.size()) {
    throw std::invalid_argument("divergence_p: dimension mismatch");
  }
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument(
        "divergence_p: the exact real divergence has a point mass at p = 0; "
        "a smoothing epsilon > 0 is required");
  }
  double sum = 0.0;
  for (Eigen::Index a = 0; a < p.size(); ++a) {
    sum += y[a] * epsilon / std::pow(p[a] * p[a] + epsilon, 1.5);
  }
  return sum / static_cast<double>(p.size()) - 1.0;
}

AMPState make_initial_state(const MeasurementInstance& inst,
                            const Eigen::VectorXcd& x0) {
  if (inst.field() != Field::Complex) {
    throw std::invalid_argument("make_initial_state: complex x0, real model");
  }
  if (x0.size() != inst.n) {
    throw std::invalid_argument("make_initial_state: x0 size != n");
  }
  AMPState state;
  state.x_cplx = x0;
  state.p_cplx = Eigen::VectorXcd::Zero(inst.m);
  state.g_prev_cplx = Eigen::VectorXcd::Zero(inst.m);
  return state;
}

AMPState make_initial_state(const MeasurementInstance& inst,
                            const Eigen::VectorXd& x0) {
  if (inst.field() != Field::Real) {
    throw std::invalid_argument("make_initial_state: real x0, complex model");
  }
  if (x0.size() != inst.n) {
    throw std::invalid_argument("make_initial_state: x0 size != n");
  }
  AMPState state;
  state.x_real = x0;
  state.p_real = Eigen::VectorXd::Zero(inst.m);
  state.g_prev_real = Eigen::VectorXd::Zero(inst.m);
  return state;
}

AMPState make_informative_init(const MeasurementInstance& inst, double alpha0,
                               double sigma0_sq, std::uint64_t seed) {
  if (!(sigma0_sq >= 0.0)) {
    throw std::invalid_argument("make_informative_init: sigma0_sq < 0");
  }
  if (alpha0 * alpha0 + sigma0_sq == 0.0) {
    throw std::invalid_argument("make_informative_init: zero initial state");
  }
  const double sigma0 = std::sqrt(sigma0_sq);
  Rng rng(derive_seed(seed, kStreamInit));
  if (inst.field() == Field::Complex) {
    Eigen::VectorXcd x0(inst.n);
    for (int i = 0; i < inst.n; ++i) {
      x0[i] = alpha0 * inst.x_star_cplx[i] + sigma0 * rng.complex_gaussian(1.0);
    }
    return make_initial_state(inst, x0);
  }
  Eigen::VectorXd x0(inst.n);
  for (int i = 0; i < inst.n; ++i) {
    x0[i] = alpha0 * inst.x_star_real[i] + sigma0 * rng.gaussian(1.0);
  }
  return make_initial_state(inst, x0);
}

AMPState amp_step(const AMPState& state, const MeasurementInstance& inst,
                  double epsilon) {
  if (inst.field() == Field::Complex) {
    return step_complex(state, inst, epsilon, nullptr);
  }
  if (state.x_real.size() != inst.n) {
    throw std::invalid_argument("amp_step: state/instance dimension mismatch");
  }
  return step_real_damped(state, inst, epsilon, /*lambda_prev=*/1.0,
                          /*tau_next=*/state.tau, /*mu=*/0.0);
}

AMPState amp_step_general(const AMPState& state,
                          const MeasurementInstance& inst, double mu,
                          double epsilon) {
  if (inst.field() != Field::Real) {
    throw std::invalid_argument("amp_step_general: real-field iteration only");
  }
  if (!(mu >= 0.0)) {
    throw std::invalid_argument("amp_step_general: mu < 0");
  }
  if (state.x_real.size() != inst.n) {
    throw std::invalid_argument(
        "amp_step_general: state/instance dimension mismatch");
  }
  if (mu == 0.0) {
    return step_real_damped(state, inst, epsilon, 1.0, state.tau, 0.0);
  }
  double lambda_prev = 1.0;  // λ_{−1} := 1, the undamped value
  double tau_next = 0.0;     // τ_0 = 0 from τ^{−1} = −1/2 in the recursion
  if (state.t > 0) {
    const double div_prev = state.divergence;  // div measured at p^{t−1}
    if (!(-div_prev > 0.0)) {
      throw std::runtime_error(
          "amp_step_general: divergence-estimate breakdown (-div <= 0)");
    }
    lambda_prev = (-div_prev) / ((-div_prev) + mu * (state.tau + 0.5));
    tau_next =
        (state.tau + 0.5) / (-div_prev) * lambda_prev / inst.delta();
  }
  return step_real_damped(state, inst, epsilon, lambda_prev, tau_next, mu);
}

Measurement measure(const AMPState& state, const MeasurementInstance& inst) {
  Measurement out;
  if (inst.field() == Field::Complex) {
    const std::complex<double> ip = inst.x_star_cplx.adjoint() * state.x_cplx;
    const double star_norm2 = inst.x_star_cplx.squaredNorm();
    out.alpha_hat = ip / star_norm2;
    out.sigma2_hat =
        (state.x_cplx - out.alpha_hat * inst.x_star_cplx).squaredNorm() /
        star_norm2;
    const std::complex<double> phase =
        (ip == 0.0) ? std::complex<double>(1.0, 0.0) : ip / std::abs(ip);
    out.amse = (state.x_cplx - phase * inst.x_star_cplx).squaredNorm() /
               static_cast<double>(inst.n);
  } else {
    const double ip = inst.x_star_real.dot(state.x_real);
    const double star_norm2 = inst.x_star_real.squaredNorm();
    const double alpha = ip / star_norm2;
    out.alpha_hat = alpha;
    out.sigma2_hat =
        (state.x_real - alpha * inst.x_star_real).squaredNorm() / star_norm2;
    const double sign = (ip < 0.0) ? -1.0 : 1.0;
    out.amse = (state.x_real - sign * inst.x_star_real).squaredNorm() /
               static_cast<double>(inst.n);
  }
  return out;
}

AMPTrace run_amp(const MeasurementInstance& inst, const AMPState& init,
                 int iters, double epsilon,
                 const Eigen::VectorXcd* p0_override) {
  if (iters < 0) {
    throw std::invalid_argument("run_amp: iters < 0");
  }
  if (p0_override != nullptr) {
    if (inst.field() != Field::Complex) {
      throw std::invalid_argument("run_amp: p0 override is complex-only");
    }
    if (p0_override->size() != inst.m) {
      throw std::invalid_argument("run_amp: p0 override size != m");
    }
  }
  AMPTrace trace;
  trace.alpha_hat.reserve(iters + 1);
  trace.sigma2_hat.reserve(iters + 1);
  trace.amse.reserve(iters + 1);
  trace.divergence.reserve(iters + 1);

  const auto record = [&](const AMPState& s) {
    const Measurement mm = measure(s, inst);
    trace.alpha_hat.push_back(mm.alpha_hat);
    trace.sigma2_hat.push_back(mm.sigma2_hat);
    trace.amse.push_back(mm.amse);
    trace.divergence.push_back(s.divergence);
  };

  record(init);
  AMPState state = init;
  for (int k = 0; k < iters; ++k) {
    if (k == 0 && p0_override != nullptr) {
      state = step_complex(state, inst, epsilon, p0_override);
    } else {
      state = amp_step(state, inst, epsilon);
    }
    if (!state_is_finite(state, inst.field())) {
      trace.truncated = true;
      break;
    }
    record(state);
  }
  return trace;
}

}  // namespace phaseamp

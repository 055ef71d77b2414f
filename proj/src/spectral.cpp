#include "phaseamp/spectral.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "phaseamp/quadrature.hpp"
#include "phaseamp/rng.hpp"

namespace phaseamp {

namespace {

constexpr double kTauMax = 0.5 * (1.0 - 1e-9);
constexpr double kBisectTol = 1e-12;

double u_of_T(double t_val, double tau) {
  const double denom = 1.0 - 2.0 * tau * t_val;
  if (!(denom > 0.0)) {
    throw std::runtime_error("varphi: pole 1 - 2*tau*T(y) <= 0 crossed");
  }
  return 2.0 * tau * t_val / denom;
}

// Integrand weight for φ_k at radius r = |Z|: (δr²−1)^{1 or 0} · u^{1 or 2}.
double phi_weight(int k, double delta_r2_minus_1, double u) {
  switch (k) {
    case 1:
      return delta_r2_minus_1 * u;
    case 2:
      return u * u;
    case 3:
      return delta_r2_minus_1 * u * u;
    default:
      throw std::invalid_argument("varphi: k must be 1, 2 or 3");
  }
}

double varphi_quadrature(int k, double delta, double tau) {
  // r = |Z| has density 2δr·e^{−δr²}; truncate where the weight is < 1e-19
  // relative (δR² = 45 keeps the polynomially-weighted tail below 1e-12).
  const double r_max = std::sqrt(45.0 / delta);
  const auto integrand = [&](double r) {
    const double dr2 = delta * r * r;
    const double u = u_of_T(preprocess_T(r, delta), tau);
    return phi_weight(k, dr2 - 1.0, u) * 2.0 * delta * r * std::exp(-dr2);
  };
  return integrate(integrand, 0.0, r_max, 1e-12);
}

double varphi_monte_carlo(int k, double delta, double tau, double sigma_w2,
                          const ExpectationMethod& method) {
  if (method.n_samples < 1000) {
    throw std::invalid_argument("varphi: monte_carlo needs >= 1000 samples");
  }
  Rng rng(method.seed);
  const double sigma_w = std::sqrt(sigma_w2);
  double sum = 0.0;
  for (int i = 0; i < method.n_samples; ++i) {
    // |Z|² ~ Exp(mean 1/δ) for Z ~ CN(0, 1/δ).
    const double r2 = -std::log(rng.uniform(1e-300, 1.0)) / delta;
    const double y = std::sqrt(r2) + sigma_w * rng.gaussian(1.0);
    const double u = u_of_T(preprocess_T(y, delta), tau);
    sum += phi_weight(k, delta * r2 - 1.0, u);
  }
  return sum / static_cast<double>(method.n_samples);
}

}  // namespace

void validate_spectral_config(const SpectralConfig& cfg) {
  if (!(cfg.delta > 2.0)) {
    throw std::invalid_argument("SpectralConfig: delta <= 2");
  }
  if (!(cfg.sigma_w2 >= 0.0)) {
    throw std::invalid_argument("SpectralConfig: sigma_w2 < 0");
  }
  if (!(cfg.power_tol > 0.0)) {
    throw std::invalid_argument("SpectralConfig: power_tol <= 0");
  }
  if (cfg.power_max_iters < 1) {
    throw std::invalid_argument("SpectralConfig: power_max_iters < 1");
  }
}

double preprocess_T(double y, double delta) {
  if (!(delta > 1.0)) {
    throw std::invalid_argument("preprocess_T: delta <= 1");
  }
  const double dy2 = delta * y * y;
  return (dy2 - 1.0) / (dy2 + std::sqrt(delta) - 1.0);
}

Eigen::VectorXcd apply_D(const Eigen::MatrixXcd& A,
                         const Eigen::VectorXd& t_vals,
                         const Eigen::VectorXcd& v) {
  if (A.rows() != t_vals.size() || A.cols() != v.size()) {
    throw std::invalid_argument("apply_D: dimension mismatch");
  }
  Eigen::VectorXcd av = A * v;
  for (Eigen::Index a = 0; a < av.size(); ++a) av[a] *= t_vals[a];
  return A.adjoint() * av;
}

Eigen::VectorXcd top_eigvec(const Eigen::MatrixXcd& A,
                            const Eigen::VectorXd& t_vals, int n,
                            const SpectralConfig& cfg) {
  validate_spectral_config(cfg);
  if (A.cols() != n || A.rows() != t_vals.size()) {
    throw std::invalid_argument("top_eigvec: dimension mismatch");
  }

  // λ̂_max(AᴴA) by 20 plain power steps from the all-ones vector.
  Eigen::VectorXcd w = Eigen::VectorXcd::Ones(n);
  w /= w.norm();
  for (int i = 0; i < 20; ++i) {
    w = A.adjoint() * (A * w);
    w /= w.norm();
  }
  const double lambda_hat_max = (A * w).squaredNorm();

  // A positive shift making D + sI PSD: for any unit u,
  // uᴴDu ≥ (min T)·λ_max(AᴴA); the margin absorbs the power-step
  // underestimate of λ_max.
  const double shift = std::max(0.0, -t_vals.minCoeff()) * lambda_hat_max +
                       0.1 * lambda_hat_max + 0.1;

  Eigen::VectorXcd v = Eigen::VectorXcd::Ones(n);
  v /= v.norm();
  double rho_prev = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  for (int it = 0; it < cfg.power_max_iters; ++it) {
    Eigen::VectorXcd dv = apply_D(A, t_vals, v) + shift * v;
    const double rho = std::real(v.dot(dv));  // Rayleigh of D + sI
    const double residual = (dv - rho * v).norm();  // ‖v‖ = 1
    if (it > 0 && std::abs(rho - rho_prev) < cfg.power_tol &&
        residual <= 10.0 * cfg.power_tol) {
      converged = true;
      break;
    }
    rho_prev = rho;
    v = dv / dv.norm();
  }
  if (!converged) {
    throw std::runtime_error("top_eigvec: power iteration did not converge");
  }

  // Phase fix: make the first coordinate real nonnegative.
  const std::complex<double> c = v[0];
  if (std::abs(c) > 0.0) v *= std::conj(c) / std::abs(c);
  v *= std::sqrt(static_cast<double>(n));  // ‖v‖ was 1
  return v;
}

double varphi(int k, double delta, double tau, double sigma_w2,
              const ExpectationMethod& method) {
  if (!(delta > 1.0)) throw std::invalid_argument("varphi: delta <= 1");
  if (!(tau >= 0.0)) throw std::invalid_argument("varphi: tau < 0");
  if (!(sigma_w2 >= 0.0)) throw std::invalid_argument("varphi: sigma_w2 < 0");
  if (method.kind == ExpectationMethod::Kind::Quadrature) {
    if (sigma_w2 > 0.0) {
      throw std::invalid_argument(
          "varphi: the quadrature path is noiseless-only; use monte_carlo "
          "for sigma_w2 > 0");
    }
    return varphi_quadrature(k, delta, tau);
  }
  return varphi_monte_carlo(k, delta, tau, sigma_w2, method);
}

TauSolution solve_tau(double delta, double sigma_w2,
                      const ExpectationMethod& method) {
  if (!(delta > 2.0)) {
    throw std::invalid_argument("solve_tau: requires delta > 2");
  }
  const double target = 1.0 / delta;

  // τ⋆: φ2 is increasing in τ from 0; in the noiseless model it reaches the
  // target exactly in the τ → 1/2 limit, so a missing sign change on the
  // open bracket means τ⋆ is the endpoint.
  double tau_star = kTauMax;
  if (varphi(2, delta, kTauMax, sigma_w2, method) - target > 0.0) {
    double lo = 0.0, hi = kTauMax;
    while (hi - lo > kBisectTol) {
      const double mid = 0.5 * (lo + hi);
      if (varphi(2, delta, mid, sigma_w2, method) - target > 0.0) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    tau_star = 0.5 * (lo + hi);
  }

  // τ: φ1 also grows from 0 (= −target at τ = 0 after shift); the root is
  // interior whenever δ is inside the validity region.
  if (!(varphi(1, delta, tau_star, sigma_w2, method) - target > 0.0)) {
    throw std::runtime_error(
        "solve_tau: bracket failure for phi1 (delta too close to the "
        "validity edge)");
  }
  double lo = 0.0, hi = tau_star;
  while (hi - lo > kBisectTol) {
    const double mid = 0.5 * (lo + hi);
    if (varphi(1, delta, mid, sigma_w2, method) - target > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  TauSolution out;
  out.tau = 0.5 * (lo + hi);
  out.tau_star = tau_star;
  return out;
}

Eigen::VectorXcd corrected_p0(const Eigen::MatrixXcd& A,
                              const Eigen::VectorXcd& x0,
                              const Eigen::VectorXd& y, double tau) {
  if (A.cols() != x0.size() || A.rows() != y.size()) {
    throw std::invalid_argument("corrected_p0: dimension mismatch");
  }
  const double delta =
      static_cast<double>(A.rows()) / static_cast<double>(A.cols());
  Eigen::VectorXcd p0 = A * x0;
  for (Eigen::Index a = 0; a < p0.size(); ++a) {
    const double mult = 1.0 - 2.0 * tau * preprocess_T(y[a], delta);
    if (!(mult > 0.0)) {
      throw std::runtime_error(
          "corrected_p0: nonpositive multiplier 1 - 2*tau*T(y) (pole guard)");
    }
    p0[a] *= mult;
  }
  return p0;
}

OverlapPrediction predict_init_overlap(double delta, double tau,
                                       double sigma_w2,
                                       const ExpectationMethod& method) {
  const double phi2 = varphi(2, delta, tau, sigma_w2, method);
  const double phi3 = varphi(3, delta, tau, sigma_w2, method);
  OverlapPrediction out;
  out.alpha0_sq = (1.0 - delta * phi2) / (1.0 + delta * phi3);
  out.sigma0_sq = 1.0 - out.alpha0_sq;
  return out;
}

SpectralResult spectral_initialize(const MeasurementInstance& inst,
                                   const SpectralConfig& cfg) {
  validate_spectral_config(cfg);
  if (inst.field() != Field::Complex) {
    throw std::invalid_argument(
        "spectral_initialize: complex-field instances only");
  }
  // All computations use the instance's exact aspect ratio.
  const double delta =
      static_cast<double>(inst.m) / static_cast<double>(inst.n);
  if (!(delta > 2.0)) {
    throw std::invalid_argument("spectral_initialize: instance m/n <= 2");
  }
  if (std::abs(delta - cfg.delta) > 0.05) {
    throw std::invalid_argument(
        "spectral_initialize: cfg.delta does not match the instance");
  }
  if (std::abs(cfg.sigma_w2 - inst.config.params.sigma_w2) > 1e-12) {
    throw std::invalid_argument(
        "spectral_initialize: cfg.sigma_w2 does not match the instance");
  }

  Eigen::VectorXd t_vals(inst.m);
  for (int a = 0; a < inst.m; ++a) {
    t_vals[a] = preprocess_T(inst.y[a], delta);
  }

  SpectralResult result;
  const Eigen::VectorXcd v = top_eigvec(inst.A_cplx, t_vals, inst.n, cfg);
  const double rho =
      inst.y.norm() / std::sqrt(static_cast<double>(inst.n));
  result.x0 = rho * v;

  const TauSolution ts = solve_tau(delta, cfg.sigma_w2, cfg.method);
  result.tau = ts.tau;
  result.tau_star = ts.tau_star;
  result.p0 = corrected_p0(inst.A_cplx, result.x0, inst.y, ts.tau);

  const OverlapPrediction pred =
      predict_init_overlap(delta, ts.tau, cfg.sigma_w2, cfg.method);
  result.predicted_alpha0_sq = pred.alpha0_sq;
  result.predicted_sigma0_sq = pred.sigma0_sq;
  return result;
}

}  // namespace phaseamp

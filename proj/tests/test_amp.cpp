#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

#include "doctest.h"
#include "phaseamp/amp.hpp"
#include "phaseamp/model.hpp"
#include "phaseamp/se_dynamics.hpp"
#include "support/oracles.hpp"

using namespace phaseamp;

namespace {

ModelConfig make_config(Field field, double delta, double sigma_w2, int n,
                        std::uint64_t seed) {
  ModelConfig cfg;
  cfg.params.field = field;
  cfg.params.delta = delta;
  cfg.params.sigma_w2 = sigma_w2;
  cfg.n = n;
  cfg.seed = seed;
  return cfg;
}

// State-evolution trajectory of (|alpha|, sigma2) from a given start.
std::vector<SEState> se_path(const ModelParams& params, double alpha0,
                             double sigma0_sq, int iters) {
  std::vector<SEState> path;
  path.emplace_back(alpha0, sigma0_sq);
  for (int t = 0; t < iters; ++t) {
    path.push_back(se_step(path.back(), params));
  }
  return path;
}

}  // namespace

TEST_CASE("instance generation: shapes, norms, determinism") {
  const auto cfg = make_config(Field::Complex, 2.5, 0.0, 64, 7);
  const MeasurementInstance inst = generate_instance(cfg);
  CHECK(inst.n == 64);
  CHECK(inst.m == 160);  // round(2.5 * 64)
  CHECK(inst.A_cplx.rows() == 160);
  CHECK(inst.A_cplx.cols() == 64);
  CHECK(inst.x_star_cplx.size() == 64);
  CHECK(inst.A_real.size() == 0);
  CHECK(inst.y.size() == 160);
  CHECK(inst.y.minCoeff() >= 0.0);  // noiseless magnitudes
  CHECK(inst.x_star_cplx.squaredNorm() ==
        doctest::Approx(64.0).epsilon(1e-12));

  // Entries of A have variance ~ 1/m.
  const double a_var = inst.A_cplx.squaredNorm() / (160.0 * 64.0);
  CHECK(a_var == doctest::Approx(1.0 / 160.0).epsilon(0.15));

  // Same seed: bit-identical.  Different seed: different.
  const MeasurementInstance again = generate_instance(cfg);
  CHECK(again.A_cplx == inst.A_cplx);
  CHECK(again.x_star_cplx == inst.x_star_cplx);
  CHECK(again.y == inst.y);
  auto cfg2 = cfg;
  cfg2.seed = 8;
  const MeasurementInstance other = generate_instance(cfg2);
  CHECK(other.A_cplx != inst.A_cplx);

  // Real field.
  const auto rcfg = make_config(Field::Real, 2.0, 0.0, 32, 3);
  const MeasurementInstance rinst = generate_instance(rcfg);
  CHECK(rinst.m == 64);
  CHECK(rinst.A_real.rows() == 64);
  CHECK(rinst.A_cplx.size() == 0);
  CHECK(rinst.x_star_real.squaredNorm() ==
        doctest::Approx(32.0).epsilon(1e-12));

  // Nonnegative-uniform signal (real field only).
  auto ucfg = rcfg;
  ucfg.signal = SignalDist::NonnegUniform;
  const MeasurementInstance uinst = generate_instance(ucfg);
  CHECK(uinst.x_star_real.minCoeff() >= 0.0);
  CHECK(uinst.x_star_real.squaredNorm() ==
        doctest::Approx(32.0).epsilon(1e-12));

  auto ucfg_c = ucfg;
  ucfg_c.params.field = Field::Complex;
  CHECK_THROWS_AS(generate_instance(ucfg_c), std::invalid_argument);
  CHECK_THROWS_AS(generate_instance(make_config(Field::Real, 2.0, 0.0, 8, 1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      generate_instance(make_config(Field::Real, 0.001, 0.0, 16, 1)),
      std::invalid_argument);
}

TEST_CASE("residual nonlinearity g") {
  // Complex, exact (epsilon = 0): y p/|p| - p, with p/|p| := 1 at p = 0.
  Eigen::VectorXcd p(3);
  p << std::complex<double>(3.0, 4.0), std::complex<double>(0.0, 0.0),
      std::complex<double>(-1.0, 0.5);
  Eigen::VectorXd y(3);
  y << 2.0, 1.5, 0.7;
  const Eigen::VectorXcd g0 = g_amp(p, y, 0.0);
  for (int a = 0; a < 3; ++a) {
    const double ap = std::abs(p(a));
    const std::complex<double> dir =
        ap == 0.0 ? std::complex<double>(1.0, 0.0) : p(a) / ap;
    CHECK(std::abs(g0(a) - (y(a) * dir - p(a))) <= 1e-15);
  }
  CHECK(g0(1) == std::complex<double>(1.5, 0.0));

  // Complex, smoothed.
  const double eps = 0.3;
  const Eigen::VectorXcd ge = g_amp(p, y, eps);
  for (int a = 0; a < 3; ++a) {
    const std::complex<double> want =
        y(a) * p(a) / std::sqrt(std::norm(p(a)) + eps) - p(a);
    CHECK(std::abs(ge(a) - want) <= 1e-15);
  }

  // Real, exact: y sign(p) - p with sign(0) := +1.
  Eigen::VectorXd pr(3);
  pr << 1.2, 0.0, -0.4;
  const Eigen::VectorXd gr = g_amp(pr, y, 0.0);
  CHECK(gr(0) == doctest::Approx(2.0 - 1.2).epsilon(1e-15));
  CHECK(gr(1) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(gr(2) == doctest::Approx(-0.7 + 0.4).epsilon(1e-15));

  // Real, smoothed.
  const Eigen::VectorXd gre = g_amp(pr, y, eps);
  for (int a = 0; a < 3; ++a) {
    const double want = y(a) * pr(a) / std::sqrt(pr(a) * pr(a) + eps) - pr(a);
    CHECK(gre(a) == doctest::Approx(want).epsilon(1e-15));
  }

  Eigen::VectorXd y_short(2);
  y_short << 1.0, 2.0;
  CHECK_THROWS_AS(g_amp(p, y_short, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(g_amp(pr, y_short, 0.0), std::invalid_argument);
}

TEST_CASE("divergence estimator: closed forms") {
  const int m = 40;
  Eigen::VectorXcd p(m);
  Eigen::VectorXd y(m);
  for (int a = 0; a < m; ++a) {
    p(a) = std::complex<double>(std::cos(0.7 * a) + 0.1, std::sin(1.3 * a));
    y(a) = 0.5 + 0.04 * a;
  }

  // Complex, epsilon = 0.
  double want0 = 0.0;
  for (int a = 0; a < m; ++a) {
    want0 += y(a) / (2.0 * std::max(std::abs(p(a)), 1e-12));
  }
  want0 = want0 / m - 1.0;
  CHECK(divergence_p(p, y, 0.0) == doctest::Approx(want0).epsilon(1e-13));

  // Complex, epsilon > 0.
  const double eps = 0.1;
  double wante = 0.0;
  for (int a = 0; a < m; ++a) {
    const double n2 = std::norm(p(a));
    wante += y(a) * (0.5 * n2 + eps) / std::pow(n2 + eps, 1.5);
  }
  wante = wante / m - 1.0;
  CHECK(divergence_p(p, y, eps) == doctest::Approx(wante).epsilon(1e-13));

  // Real, epsilon > 0.
  Eigen::VectorXd pr = p.real();
  double wantr = 0.0;
  for (int a = 0; a < m; ++a) {
    wantr += y(a) * eps / std::pow(pr(a) * pr(a) + eps, 1.5);
  }
  wantr = wantr / m - 1.0;
  CHECK(divergence_p(pr, y, eps) == doctest::Approx(wantr).epsilon(1e-13));

  // Real exact divergence is not defined (point mass at p = 0).
  CHECK_THROWS_AS(divergence_p(pr, y, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(divergence_p(pr, y, -1.0), std::invalid_argument);
  Eigen::VectorXd y_short(2);
  y_short << 1.0, 2.0;
  CHECK_THROWS_AS(divergence_p(p, y_short, 0.0), std::invalid_argument);
}

TEST_CASE("divergence estimator equals the mean Jacobian of g") {
  // Complex: (1/m) sum of tr(J_a)/2 over the R^2 -> R^2 coordinate maps.
  const int m = 50;
  Eigen::VectorXcd p(m);
  Eigen::VectorXd y(m);
  for (int a = 0; a < m; ++a) {
    p(a) = std::complex<double>(1.3 * std::sin(a + 1.0), std::cos(2.0 * a));
    y(a) = 0.8 + 0.02 * a;
  }
  const double eps = 0.1;
  const double h = 1e-6;
  double acc = 0.0;
  for (int a = 0; a < m; ++a) {
    auto g_at = [&](std::complex<double> pa) {
      Eigen::VectorXcd pp = p;
      pp(a) = pa;
      return g_amp(pp, y, eps)(a);
    };
    const double d_re =
        (g_at(p(a) + h).real() - g_at(p(a) - h).real()) / (2.0 * h);
    const double d_im = (g_at(p(a) + std::complex<double>(0.0, h)).imag() -
                         g_at(p(a) - std::complex<double>(0.0, h)).imag()) /
                        (2.0 * h);
    acc += 0.5 * (d_re + d_im);
  }
  CHECK(divergence_p(p, y, eps) == doctest::Approx(acc / m).epsilon(1e-7));

  // Real: plain scalar derivative.
  Eigen::VectorXd pr = p.real();
  double accr = 0.0;
  for (int a = 0; a < m; ++a) {
    auto g_at = [&](double pa) {
      Eigen::VectorXd pp = pr;
      pp(a) = pa;
      return g_amp(pp, y, eps)(a);
    };
    accr += (g_at(pr(a) + h) - g_at(pr(a) - h)) / (2.0 * h);
  }
  CHECK(divergence_p(pr, y, eps) == doctest::Approx(accr / m).epsilon(1e-7));
}

TEST_CASE("initial fitted values are A x0 and the truth is a fixed point") {
  const auto inst =
      generate_instance(make_config(Field::Complex, 3.0, 0.0, 256, 11));
  const AMPState init = make_initial_state(inst, inst.x_star_cplx);
  CHECK(init.t == 0);
  CHECK(init.divergence == 0.0);

  const AMPState s1 = amp_step(init, inst, 0.0);
  const Eigen::VectorXcd ax0 = apply_A(inst, inst.x_star_cplx);
  CHECK(s1.p_cplx == ax0);  // g_prev = 0 makes p0 = A x0 exactly

  // Noiseless y = |A x*|: the residual vanishes and x* reproduces itself.
  AMPState s = init;
  for (int t = 0; t < 10; ++t) s = amp_step(s, inst, 0.0);
  CHECK(measure(s, inst).amse <= 1e-3);
}

TEST_CASE("measure: aligned, empty, and decomposed states") {
  const auto inst =
      generate_instance(make_config(Field::Complex, 2.0, 0.0, 1024, 5));

  // A rotated copy of the truth has zero aligned error.
  const std::complex<double> rot = std::polar(1.0, 0.9);
  const Measurement aligned =
      measure(make_initial_state(inst, (rot * inst.x_star_cplx).eval()), inst);
  CHECK(std::abs(aligned.alpha_hat - rot) <= 1e-12);
  CHECK(aligned.sigma2_hat <= 1e-12);
  CHECK(aligned.amse <= 1e-12);

  // The zero vector scores amse = 1 by the norm convention.
  const Measurement zero = measure(
      make_initial_state(inst, Eigen::VectorXcd::Zero(inst.n).eval()), inst);
  CHECK(zero.alpha_hat == std::complex<double>(0.0, 0.0));
  CHECK(zero.sigma2_hat == 0.0);
  CHECK(zero.amse == doctest::Approx(1.0).epsilon(1e-12));

  // x = a x* + b u with u orthogonal to x* decomposes exactly.
  Eigen::VectorXcd u = Eigen::VectorXcd::Ones(inst.n);
  u(0) = std::complex<double>(0.3, -1.1);
  const std::complex<double> proj =
      inst.x_star_cplx.dot(u) / inst.x_star_cplx.squaredNorm();
  u -= proj * inst.x_star_cplx;
  u *= std::sqrt(inst.x_star_cplx.squaredNorm() / u.squaredNorm());
  const Eigen::VectorXcd x = 0.7 * inst.x_star_cplx + 0.5 * u;
  const Measurement mm = measure(make_initial_state(inst, x), inst);
  CHECK(std::abs(mm.alpha_hat - 0.7) <= 1e-10);
  CHECK(mm.sigma2_hat == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(mm.amse == doctest::Approx(0.09 + 0.25).epsilon(1e-9));
}

TEST_CASE("informative initialization concentrates on its target") {
  const auto inst =
      generate_instance(make_config(Field::Complex, 2.0, 0.0, 4096, 21));
  const AMPState init = make_informative_init(inst, 0.5, 0.5, 99);
  const Measurement mm = measure(init, inst);
  CHECK(std::abs(mm.alpha_hat.real() - 0.5) <= 0.06);
  CHECK(std::abs(mm.alpha_hat.imag()) <= 0.06);
  CHECK(std::abs(mm.sigma2_hat - 0.5) <= 0.06);

  // Pure-noise start is allowed; the empty start is not.
  const AMPState noise_only = make_informative_init(inst, 0.0, 1.0, 7);
  CHECK(std::abs(measure(noise_only, inst).alpha_hat) <= 0.06);
  CHECK_THROWS_AS(make_informative_init(inst, 0.0, 0.0, 7),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_informative_init(inst, 0.5, -0.1, 7),
                  std::invalid_argument);
}

TEST_CASE("complex solver converges and tracks its scalar prediction") {
  const auto inst =
      generate_instance(make_config(Field::Complex, 3.0, 0.0, 2000, 42));
  const AMPState init = make_informative_init(inst, 0.5, 0.5, 1042);
  const AMPTrace trace = run_amp(inst, init, 200, 0.0);
  REQUIRE_FALSE(trace.truncated);
  REQUIRE(trace.size() == 201);
  CHECK(trace.divergence[0] == 0.0);

  CHECK(trace.amse.back() < 1e-6);

  const auto path = se_path(inst.config.params, 0.5, 0.5, 15);
  for (int t = 0; t <= 15; ++t) {
    CHECK(std::abs(std::abs(trace.alpha_hat[t]) - std::abs(path[t].alpha)) <=
          0.08);
    CHECK(std::abs(trace.sigma2_hat[t] - path[t].sigma2) <= 0.08);
  }
}

TEST_CASE("real solver converges under light smoothing") {
  const auto inst =
      generate_instance(make_config(Field::Real, 1.8, 0.0, 2000, 17));
  const AMPState init = make_informative_init(inst, 0.6, 0.3, 1017);
  const AMPTrace trace = run_amp(inst, init, 500, 1e-6);
  REQUIRE_FALSE(trace.truncated);
  CHECK(trace.amse.back() < 1e-4);
}

TEST_CASE("smoothed g approaches the exact g as epsilon vanishes") {
  const int m = 64;
  Eigen::VectorXcd p(m);
  Eigen::VectorXd y(m);
  for (int a = 0; a < m; ++a) {
    p(a) = std::complex<double>(std::sin(3.0 * a) + 0.2, std::cos(5.0 * a));
    y(a) = 0.4 + 0.02 * a;
  }
  const Eigen::VectorXcd exact = g_amp(p, y, 0.0);
  double prev_err = std::numeric_limits<double>::infinity();
  for (double eps : {1e-2, 1e-4, 1e-6}) {
    const double err =
        (g_amp(p, y, eps) - exact).cwiseAbs().maxCoeff();
    // |y p/sqrt(|p|^2+eps) - y p/|p|| <= y eps/(2 |p|^2) for |p| >> sqrt(eps).
    CHECK(err <= 2.0 * std::sqrt(eps));
    CHECK(err < prev_err);
    prev_err = err;
  }
}

TEST_CASE("iteration is equivariant under a global phase") {
  const auto inst =
      generate_instance(make_config(Field::Complex, 2.5, 0.0, 256, 31));
  const AMPState init = make_informative_init(inst, 0.4, 0.6, 77);
  const std::complex<double> rot = std::polar(1.0, 1.7);
  const AMPState rotated =
      make_initial_state(inst, (rot * init.x_cplx).eval());

  const AMPTrace base = run_amp(inst, init, 5, 0.0);
  const AMPTrace spun = run_amp(inst, rotated, 5, 0.0);
  REQUIRE(base.size() == spun.size());
  for (std::size_t t = 0; t < base.size(); ++t) {
    CHECK(std::abs(spun.alpha_hat[t] - rot * base.alpha_hat[t]) <= 1e-10);
    CHECK(std::abs(spun.sigma2_hat[t] - base.sigma2_hat[t]) <= 1e-10);
    CHECK(std::abs(spun.amse[t] - base.amse[t]) <= 1e-10);
  }
}

TEST_CASE("an orthogonal start at the global threshold stays uninformative") {
  const auto inst =
      generate_instance(make_config(Field::Complex, 2.0, 0.0, 1024, 13));
  Eigen::VectorXcd u = make_informative_init(inst, 0.0, 1.0, 5).x_cplx;
  const std::complex<double> proj =
      inst.x_star_cplx.dot(u) / inst.x_star_cplx.squaredNorm();
  u -= proj * inst.x_star_cplx;  // exactly orthogonal to the truth

  const AMPTrace trace = run_amp(inst, make_initial_state(inst, u), 50, 0.0);
  REQUIRE_FALSE(trace.truncated);
  const double cap = 5.0 / std::sqrt(static_cast<double>(inst.n));
  for (std::size_t t = 0; t < trace.size(); ++t) {
    CHECK(std::abs(trace.alpha_hat[t]) <= cap);
    CHECK(trace.amse[t] >= 0.5);  // never drifts toward recovery
  }
}

TEST_CASE("runs are bitwise reproducible") {
  const auto cfg = make_config(Field::Real, 2.2, 1e-3, 256, 19);
  const auto inst = generate_instance(cfg);
  const AMPState init = make_informative_init(inst, 0.5, 0.5, 23);
  const AMPTrace a = run_amp(inst, init, 20, 1e-3);
  const AMPTrace b = run_amp(generate_instance(cfg),
                             make_informative_init(inst, 0.5, 0.5, 23), 20,
                             1e-3);
  REQUIRE(a.size() == b.size());
  for (std::size_t t = 0; t < a.size(); ++t) {
    CHECK(a.alpha_hat[t] == b.alpha_hat[t]);
    CHECK(a.sigma2_hat[t] == b.sigma2_hat[t]);
    CHECK(a.divergence[t] == b.divergence[t]);
  }
}

TEST_CASE("ridge-damped iteration reduces to the plain one at mu = 0") {
  const auto inst =
      generate_instance(make_config(Field::Real, 2.0, 0.0, 256, 29));
  AMPState plain = make_informative_init(inst, 0.5, 0.5, 41);
  AMPState damped = plain;
  for (int t = 0; t < 5; ++t) {
    plain = amp_step(plain, inst, 1e-3);
    damped = amp_step_general(damped, inst, 0.0, 1e-3);
    CHECK(plain.x_real == damped.x_real);
    CHECK(plain.p_real == damped.p_real);
    CHECK(plain.divergence == damped.divergence);
  }
}

TEST_CASE("large mu shrinks the update") {
  const auto inst =
      generate_instance(make_config(Field::Real, 2.0, 0.0, 256, 37));
  const AMPState init = make_informative_init(inst, 0.5, 0.5, 53);
  const AMPState free_step = amp_step_general(init, inst, 0.0, 1e-3);
  const AMPState tight_step = amp_step_general(init, inst, 1e6, 1e-3);
  CHECK(tight_step.x_real.norm() <= 1e-3 * free_step.x_real.norm());
}

TEST_CASE("moderate ridge damping keeps the iteration finite") {
  const auto inst =
      generate_instance(make_config(Field::Real, 2.0, 0.0, 256, 43));
  AMPState a = make_informative_init(inst, 0.5, 0.5, 61);
  AMPState b = a;
  // mu must stay small enough that the shrinkage factor cannot compound
  // into a collapse of p below the smoothing scale before the signal locks
  // on; at this size mu = 0.01 converges while mu ≈ 0.02 already breaks.
  for (int t = 0; t < 50; ++t) {
    a = amp_step_general(a, inst, 0.01, 1e-3);
    b = amp_step_general(b, inst, 0.01, 1e-3);
    CHECK(a.x_real.allFinite());
    CHECK(a.x_real == b.x_real);  // deterministic
  }
  CHECK(measure(a, inst).amse < 1.0);
  CHECK(a.tau > 0.0);
}

TEST_CASE("ridge-damped iteration guards its domain") {
  const auto rinst =
      generate_instance(make_config(Field::Real, 2.0, 0.0, 256, 47));
  const auto cinst =
      generate_instance(make_config(Field::Complex, 2.0, 0.0, 256, 47));
  const AMPState rinit = make_informative_init(rinst, 0.5, 0.5, 3);
  const AMPState cinit = make_informative_init(cinst, 0.5, 0.5, 3);

  CHECK_THROWS_AS(amp_step_general(cinit, cinst, 0.1, 1e-3),
                  std::invalid_argument);
  CHECK_THROWS_AS(amp_step_general(rinit, rinst, -0.1, 1e-3),
                  std::invalid_argument);

  // A nonnegative measured divergence is a breakdown when mu > 0.
  AMPState broken = amp_step_general(rinit, rinst, 0.1, 1e-3);
  broken.divergence = 0.0;
  CHECK_THROWS_AS(amp_step_general(broken, rinst, 0.1, 1e-3),
                  std::runtime_error);
}

TEST_CASE("p0 override is a complex-only seam with matching size") {
  const auto rinst =
      generate_instance(make_config(Field::Real, 2.0, 0.0, 256, 53));
  const AMPState rinit = make_informative_init(rinst, 0.5, 0.5, 3);
  Eigen::VectorXcd p0 = Eigen::VectorXcd::Zero(rinst.m);
  CHECK_THROWS_AS(run_amp(rinst, rinit, 1, 1e-3, &p0),
                  std::invalid_argument);

  const auto cinst =
      generate_instance(make_config(Field::Complex, 2.0, 0.0, 256, 53));
  const AMPState cinit = make_informative_init(cinst, 0.5, 0.5, 3);
  Eigen::VectorXcd bad = Eigen::VectorXcd::Zero(cinst.m + 1);
  CHECK_THROWS_AS(run_amp(cinst, cinit, 1, 0.0, &bad), std::invalid_argument);
  CHECK_THROWS_AS(run_amp(cinst, cinit, -1, 0.0), std::invalid_argument);

  // Overriding p0 changes the first fitted values but not the start row.
  Eigen::VectorXcd p0c = apply_A(cinst, cinit.x_cplx);
  p0c *= 0.5;
  const AMPTrace with = run_amp(cinst, cinit, 1, 0.0, &p0c);
  const AMPTrace without = run_amp(cinst, cinit, 1, 0.0);
  CHECK(with.alpha_hat[0] == without.alpha_hat[0]);
  CHECK(with.alpha_hat[1] != without.alpha_hat[1]);
}

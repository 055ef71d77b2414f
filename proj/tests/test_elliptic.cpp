#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "phaseamp/elliptic.hpp"
#include "support/oracles.hpp"

using phaseamp::elliptic_derivatives;
using phaseamp::elliptic_E;
using phaseamp::elliptic_K;
using phaseamp::elliptic_T;
using testsupport::central_diff;
using testsupport::simpson;
namespace oracle = testsupport::oracle;

namespace {
const std::vector<double> kIdentityM = {0.01, 0.5, 2.0, 10.0, 100.0};
}

TEST_CASE("K and E match arbitrary-precision references") {
  CHECK(elliptic_K(0.05) == doctest::Approx(oracle::K_005).epsilon(1e-14));
  CHECK(elliptic_K(0.25) == doctest::Approx(oracle::K_025).epsilon(1e-14));
  CHECK(elliptic_K(0.5) == doctest::Approx(oracle::K_05).epsilon(1e-14));
  CHECK(elliptic_K(0.6) == doctest::Approx(oracle::K_06).epsilon(1e-14));
  CHECK(elliptic_K(0.75) == doctest::Approx(oracle::K_075).epsilon(1e-14));
  CHECK(elliptic_E(0.05) == doctest::Approx(oracle::E_005).epsilon(1e-14));
  CHECK(elliptic_E(0.3) == doctest::Approx(oracle::E_03).epsilon(1e-14));
  CHECK(elliptic_E(0.5) == doctest::Approx(oracle::E_05).epsilon(1e-14));
  CHECK(elliptic_E(0.6) == doctest::Approx(oracle::E_06).epsilon(1e-14));
  CHECK(elliptic_E(0.75) == doctest::Approx(oracle::E_075).epsilon(1e-14));
  CHECK(elliptic_T(0.6) == doctest::Approx(oracle::T_06).epsilon(1e-14));
  CHECK(elliptic_K(-1.0) == doctest::Approx(oracle::K_neg1).epsilon(1e-14));
  CHECK(elliptic_E(-5.0) == doctest::Approx(oracle::E_neg5).epsilon(1e-14));
}

TEST_CASE("special values and near-1 asymptotics") {
  const double half_pi = 2.0 * std::atan(1.0);
  CHECK(std::abs(elliptic_K(0.0) - half_pi) <= 1e-15);
  CHECK(std::abs(elliptic_E(0.0) - half_pi) <= 1e-15);
  CHECK(elliptic_E(1.0) == 1.0);
  CHECK(std::abs(elliptic_T(0.0)) <= 1e-15);

  // K(1-eps) ~ log(4/sqrt(eps)), E(1-eps) -> 1, T(1-eps) -> 1.
  const double eps = 1e-9;
  CHECK(std::abs(elliptic_K(1.0 - eps) - std::log(4.0 / std::sqrt(eps))) <=
        1e-6);
  CHECK(std::abs(elliptic_E(1.0 - eps) - 1.0) <= 1e-7);
  CHECK(std::abs(elliptic_T(1.0 - eps) - 1.0) <= 1e-7);
}

TEST_CASE("monotonicity of K, E, T on (0,1)") {
  for (double m = 0.05; m < 0.9; m += 0.05) {
    CHECK(elliptic_K(m + 0.05) > elliptic_K(m));
    CHECK(elliptic_E(m + 0.05) < elliptic_E(m));
    CHECK(elliptic_T(m + 0.05) > elliptic_T(m));
  }
}

TEST_CASE("negative-parameter evaluation matches the defining integral") {
  for (double m : kIdentityM) {
    const double k_direct = simpson(
        [m](double th) {
          const double s = std::sin(th);
          return 1.0 / std::sqrt(1.0 + m * s * s);
        },
        0.0, 2.0 * std::atan(1.0));
    const double e_direct = simpson(
        [m](double th) {
          const double s = std::sin(th);
          return std::sqrt(1.0 + m * s * s);
        },
        0.0, 2.0 * std::atan(1.0));
    CHECK(std::abs(elliptic_K(-m) - k_direct) <= 1e-10);
    CHECK(std::abs(elliptic_E(-m) - e_direct) <= 1e-10);

    // The imaginary-modulus transformation itself.
    const double x = m / (1.0 + m);
    CHECK(std::abs(elliptic_K(-m) -
                   elliptic_K(x) / std::sqrt(1.0 + m)) <= 1e-13);
    CHECK(std::abs(elliptic_E(-m) -
                   std::sqrt(1.0 + m) * elliptic_E(x)) <= 1e-13);
  }
}

TEST_CASE("five integral identities hold to 1e-10") {
  const double half_pi = 2.0 * std::atan(1.0);
  for (double m : kIdentityM) {
    const double x = m / (1.0 + m);
    const double K = elliptic_K(x);
    const double E = elliptic_E(x);
    const double root = std::sqrt(1.0 + m);

    auto weighted = [m, half_pi](double power, bool sin2) {
      return simpson(
          [m, power, sin2](double th) {
            const double s2 = std::sin(th) * std::sin(th);
            const double base = std::pow(1.0 + m * s2, power);
            return (sin2 ? s2 : 1.0) / base;
          },
          0.0, half_pi);
    };

    const double lhs1 = weighted(0.5, true);
    const double rhs1 = ((m + 1.0) * E - K) / (m * root);
    CHECK(std::abs(lhs1 - rhs1) <= 1e-10);

    const double lhs2 = weighted(1.5, true);
    const double rhs2 = (K - E) / (m * root);
    CHECK(std::abs(lhs2 - rhs2) <= 1e-10);

    const double lhs3 = weighted(1.5, false);
    const double rhs3 = E / root;
    CHECK(std::abs(lhs3 - rhs3) <= 1e-10);

    const double lhs4 = weighted(2.5, true);
    const double rhs4 = (-(1.0 - m) * E + K) / (3.0 * m * root * (1.0 + m));
    CHECK(std::abs(lhs4 - rhs4) <= 1e-10);

    const double lhs5 = weighted(2.5, false);
    const double rhs5 = (2.0 * (m + 2.0) * E - K) / (3.0 * root * (1.0 + m));
    CHECK(std::abs(lhs5 - rhs5) <= 1e-10);

    if (m == 2.0) {
      CHECK(lhs4 == doctest::Approx(oracle::identity_iv_m2).epsilon(1e-12));
      CHECK(rhs4 == doctest::Approx(oracle::identity_iv_m2).epsilon(1e-13));
      CHECK(lhs5 == doctest::Approx(oracle::identity_v_m2).epsilon(1e-12));
      CHECK(rhs5 == doctest::Approx(oracle::identity_v_m2).epsilon(1e-13));
    }
  }
}

TEST_CASE("closed-form derivatives match centered differences") {
  const double h = 1e-6;
  for (double m : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const auto d = elliptic_derivatives(m);
    const double fd_k = central_diff([](double x) { return elliptic_K(x); },
                                     m, h);
    const double fd_e = central_diff([](double x) { return elliptic_E(x); },
                                     m, h);
    const double fd_t = central_diff([](double x) { return elliptic_T(x); },
                                     m, h);
    CHECK(std::abs(d.dK - fd_k) <= 1e-5 * (1.0 + std::abs(d.dK)));
    CHECK(std::abs(d.dE - fd_e) <= 1e-5 * (1.0 + std::abs(d.dE)));
    CHECK(std::abs(d.dT - fd_t) <= 1e-5 * (1.0 + std::abs(d.dT)));
    // dT = K/2 exactly.
    CHECK(d.dT == doctest::Approx(elliptic_K(m) / 2.0).epsilon(1e-15));
  }
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(elliptic_K(1.0), std::domain_error);
  CHECK_THROWS_AS(elliptic_K(1.0 - 1e-13), std::domain_error);
  CHECK_THROWS_AS(elliptic_K(1.5), std::domain_error);
  CHECK_THROWS_AS(elliptic_E(1.0 + 1e-6), std::domain_error);
  CHECK_THROWS_AS(elliptic_K(std::nan("")), std::domain_error);
  CHECK_THROWS_AS(elliptic_derivatives(0.0), std::domain_error);
  CHECK_THROWS_AS(elliptic_derivatives(1.0), std::domain_error);
  // Values within 1e-12 of 1 collapse onto E(1) = 1.
  CHECK(elliptic_E(1.0 - 1e-13) == 1.0);
}

// Complete elliptic integrals of the first and second kind in the
// parameter convention K(m) = ∫_0^{π/2} (1 - m sin²θ)^{-1/2} dθ,
// E(m) = ∫_0^{π/2} (1 - m sin²θ)^{1/2} dθ, plus the combination
// T(m) = E(m) - (1-m) K(m) and the closed-form derivatives.
//
// Evaluation is by the arithmetic-geometric mean for m in [0,1) and by the
// imaginary-modulus transformation for m < 0:
//   K(-m) = K(m/(1+m)) / sqrt(1+m),
//   E(-m) = sqrt(1+m) * E(m/(1+m)).

#pragma once

namespace phaseamp {

// First kind.  Domain m < 1; throws std::domain_error otherwise (including
// m within 1e-12 of 1, where K diverges logarithmically).
double elliptic_K(double m);

// Second kind.  Domain m <= 1; E(1) = 1 exactly (values of m within 1e-12
// of 1 are collapsed onto that limit).
double elliptic_E(double m);

// T(m) = E(m) - (1-m) K(m); strictly increasing, T(0)=0, T(1⁻)=1.
double elliptic_T(double m);

struct EllipticDerivatives {
  double dK;  // K'(m) = (E - (1-m)K) / (2m(1-m))
  double dE;  // E'(m) = (E - K) / (2m)
  double dT;  // T'(m) = K / 2
};

// Derivatives of K, E, T at m in (0,1).
EllipticDerivatives elliptic_derivatives(double m);

}  // namespace phaseamp

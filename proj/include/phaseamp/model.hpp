// Shared model vocabulary: the measurement field, the state-evolution
// state (α, σ²), and the model parameters (δ, σ_w², field) that every
// analysis and solver module consumes.

#pragma once

#include <complex>
#include <stdexcept>

namespace phaseamp {

enum class Field { Real, Complex };

// A point of the two-dimensional state-evolution dynamical system.  For the
// real model alpha must have zero imaginary part.
struct SEState {
  std::complex<double> alpha{0.0, 0.0};
  double sigma2 = 0.0;

  SEState() = default;
  SEState(std::complex<double> a, double s2) : alpha(a), sigma2(s2) {}
  SEState(double a, double s2) : alpha(a, 0.0), sigma2(s2) {}

  bool at_origin() const { return alpha == 0.0 && sigma2 == 0.0; }
};

struct ModelParams {
  double delta = 2.0;     // oversampling ratio m/n
  double sigma_w2 = 0.0;  // measurement-noise variance
  Field field = Field::Complex;
};

inline void validate_params(const ModelParams& p) {
  if (!(p.delta > 0.0)) throw std::invalid_argument("ModelParams: delta <= 0");
  if (!(p.sigma_w2 >= 0.0)) {
    throw std::invalid_argument("ModelParams: sigma_w2 < 0");
  }
}

inline void validate_state(const SEState& s, Field field) {
  if (!(s.sigma2 >= 0.0)) throw std::invalid_argument("SEState: sigma2 < 0");
  if (field == Field::Real && s.alpha.imag() != 0.0) {
    throw std::invalid_argument("SEState: complex alpha in the real model");
  }
}

}  // namespace phaseamp

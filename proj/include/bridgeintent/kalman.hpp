#pragma once

// One iteration of the conditioned Kalman filter: predict, prediction error
// decomposition (PED) likelihood, Joseph-form correction.

#include "bridgeintent/bridge.hpp"
#include "bridgeintent/linalg.hpp"
#include "bridgeintent/motion_models.hpp"

#include <limits>

namespace bridgeintent::kalman {

struct FilterState {
  Vector mean;
  Matrix cov;
  double log_lik = 0.0;  // running log L_n; -inf once inactive
  int n = 0;
  double t_last = std::numeric_limits<double>::quiet_NaN();
  bool active = true;

  [[nodiscard]] Gaussian belief() const { return {mean, cov}; }
};

struct StepResult {
  double log_ped = 0.0;  // log l_n = log p(y_n | y_{1:n-1})
  FilterState state;
};

/// Affine-Gaussian transition x' = A x + b + e, e ~ N(0, W).
struct LinearTransition {
  const Matrix& matrix;
  const Vector& offset;
  const Matrix& noise;
};

inline LinearTransition as_linear(const bridge::AugmentedTransition& t) { return {t.R, t.m, t.U}; }
inline LinearTransition as_linear(const motion::TransitionTriple& t) { return {t.F, t.M, t.Q}; }

/// Predicted belief R mean + m, R cov R' + U.
Gaussian predict(const Gaussian& belief, const LinearTransition& transition);

/// Likelihood and correction against `predicted`, which stands in for the
/// predict step (used directly on the prior for the first observation).
StepResult correct(const Gaussian& predicted, const FilterState& previous, double t, const Vector& y,
                   const Matrix& G, const Matrix& V);

StepResult kf_first(const bridge::AugmentedPrior& prior, double t, const Vector& y, const Matrix& G,
                    const Matrix& V);

StepResult kf_step(const FilterState& state, double t, const Vector& y, const LinearTransition& transition,
                   const Matrix& G, const Matrix& V);

inline StepResult kf_step(const FilterState& state, double t, const Vector& y,
                          const bridge::AugmentedTransition& transition, const Matrix& G, const Matrix& V) {
  return kf_step(state, t, y, as_linear(transition), G, V);
}

}  // namespace bridgeintent::kalman

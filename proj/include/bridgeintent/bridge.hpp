#pragma once

// Destination- and arrival-time-conditioned transition for the augmented
// state Z_t = [X_t; X_T].
//
// Given the forward triples over the step (F_h, M_h, Q_h) and over the
// remaining time to arrival (F_x, M_x, Q_x), the conditional
// p(X_{t+h} | X_t, X_T) is N(H_t Z_t + m_t, C_t) with
//
//   C_t = (Q_h^{-1} + F_x' Q_x^{-1} F_x)^{-1}
//   H_t = [C_t Q_h^{-1} F_h,  C_t F_x' Q_x^{-1}]
//   m_t = C_t (Q_h^{-1} M_h - F_x' Q_x^{-1} M_x)
//
// and Z_{t+h} = R Z_t + m + gamma, R = [H_t; 0 I], m = [m_t; 0],
// gamma ~ N(0, U), U = [C_t 0; 0 0].

#include "bridgeintent/linalg.hpp"
#include "bridgeintent/motion_models.hpp"

namespace bridgeintent::bridge {

/// Arrival time T lies less than `min_remaining` after t + h; the
/// quadrature point has to be deactivated.
class RemainingTimeTooSmall : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

struct BridgeOptions {
  double min_remaining = 1e-6;  // time units
  double max_condition = 1e12;  // Q_h / Q_x condition number before jitter
  double jitter_scale = 1e-10;  // jitter = jitter_scale * trace / r
};

struct AugmentedTransition {
  Matrix R;  // 2r x 2r
  Vector m;  // 2r
  Matrix U;  // 2r x 2r, nonzero only in the top-left r x r block
  double h = 0.0;
  double remaining = 0.0;

  [[nodiscard]] Eigen::Index state_dim() const { return R.rows() / 2; }
  [[nodiscard]] Matrix H() const { return R.topRows(state_dim()); }
  [[nodiscard]] Vector offset() const { return m.head(state_dim()); }
  [[nodiscard]] Matrix C() const { return U.topLeftCorner(state_dim(), state_dim()); }
};

using AugmentedPrior = Gaussian;

AugmentedTransition conditioned_transition(const motion::ModelParams& params, const motion::Destination& dest,
                                           double t, double h, double arrival, const BridgeOptions& options = {});

/// Assembles the bridged transition from precomputed forward triples over
/// the step and over the remaining time.
AugmentedTransition assemble(const motion::TransitionTriple& step, const motion::TransitionTriple& rest,
                             const BridgeOptions& options = {});

/// [G, 0_{k x r}]
Matrix augmented_observation(const Matrix& G);

/// N([mu_1; a_d], blockdiag(Sigma_1, Sigma_d)).
AugmentedPrior augmented_prior(const Gaussian& initial, const motion::Destination& dest);

/// N(x; mu1, S1) N(mu2; L x, S2) = z N(x; mean, cov). `log_z` is log z.
struct GaussianProduct {
  Vector mean;
  Matrix cov;
  double log_z = 0.0;
};

GaussianProduct multiply_linear_gaussian(const Gaussian& prior, const Matrix& L, const Vector& mu2,
                                         const Matrix& S2);

}  // namespace bridgeintent::bridge

#pragma once

// Closed-form integration of the continuous-time linear motion models.
//
//   BM   dX = sigma dW                                   state: position (s)
//   MRD  dX = Lambda (p_d - X) dt + sigma dW             state: position (s)
//   CV   dx = v dt, dv = sigma dW                        state: [position; velocity] (2s)
//   ERV  dX = A (mu_d - X) dt + B sigma dW,  A = [0 -I; eta rho],  B = [0; I]
//
// Every model integrates over a step h into X_{t+h} = F X_t + M + eps with
// eps ~ N(0, Q). Units are whatever the caller uses consistently; the bay
// scenario uses metres and minutes.

#include "bridgeintent/linalg.hpp"

#include <string>
#include <string_view>

namespace bridgeintent::motion {

enum class ModelKind { BM, MRD, CV, ERV };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct ModelParams {
  ModelKind kind = ModelKind::BM;
  int spatial_dims = 1;
  Vector reversion;  // diagonal of Lambda (MRD), 1/time
  Vector spring;     // diagonal of eta (ERV), 1/time^2
  Vector drag;       // diagonal of rho (ERV), 1/time
  Matrix noise;      // sigma, s x s; BM/MRD position noise, CV/ERV velocity noise

  [[nodiscard]] int state_dim() const;
  /// True when F, M and Q do not depend on the destination (BM, CV).
  [[nodiscard]] bool destination_free() const;
  /// Throws InvalidInput on negative coefficients or shape errors.
  void validate() const;

  static ModelParams brownian(int s, double sigma);
  static ModelParams mean_reverting(int s, double lambda, double sigma);
  static ModelParams constant_velocity(int s, double sigma);
  static ModelParams equilibrium_reverting(int s, double eta, double rho, double sigma);
};

struct Destination {
  Vector mean;  // a_d, length r
  Matrix cov;   // Sigma_d, r x r, zero for a point destination
  double prior_mass = 1.0;

  /// Point destination at `mean`.
  static Destination point(Vector mean, double prior_mass = 1.0);
};

struct TransitionTriple {
  Matrix F;
  Vector M;
  Matrix Q;
  double h = 0.0;
};

/// The state the drift pulls toward: p_d for MRD, [p_d; 0] for ERV, zero
/// (unused) for BM and CV.
Vector reversion_target(const ModelParams& params, const Destination& dest);

TransitionTriple transition(const ModelParams& params, double h, const Destination& dest);

/// Destination-dependent part of a triple, M = (I - F) target, for a triple
/// whose F and Q were computed for another destination. Bit-identical to the
/// M returned by transition() for `dest`.
Vector transition_offset(const ModelParams& params, const TransitionTriple& base, const Destination& dest);

/// Q(h) = int_0^h e^{-Au} B sigma sigma' B' e^{-A'u} du via matrix fraction
/// decomposition, with B = [0; I] loading noise on the velocity block.
Matrix mfd_covariance(const Matrix& A, const Matrix& noise, double h);

/// ERV drift matrix [0 -I; eta rho].
Matrix erv_drift(const ModelParams& params);

/// Position-selecting observation matrix, k x r. Only k = s is supported.
Matrix observation_matrix(const ModelParams& params, int obs_dims);

}  // namespace bridgeintent::motion

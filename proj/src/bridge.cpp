#include "bridgeintent/bridge.hpp"

#include <cmath>
#include <string>

namespace bridgeintent::bridge {

namespace {

// Cholesky of a transition covariance, adding a diagonal jitter when it is
// too ill-conditioned to be inverted as is.
Eigen::LLT<Matrix> factor_covariance(const Matrix& Q, const BridgeOptions& options, const char* what) {
  Eigen::LLT<Matrix> llt(Q);
  if (llt.info() == Eigen::Success && llt.rcond() * options.max_condition >= 1.0) return llt;

  const double jitter = options.jitter_scale * Q.trace() / static_cast<double>(Q.rows());
  if (!(jitter > 0.0) || !std::isfinite(jitter)) {
    throw NumericalError(std::string("bridge: ") + what + " is singular and cannot be regularized");
  }
  Matrix regularized = Q;
  regularized.diagonal().array() += jitter;
  llt.compute(regularized);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(std::string("bridge: ") + what + " is not positive definite after jitter");
  }
  return llt;
}

}  // namespace

AugmentedTransition assemble(const motion::TransitionTriple& step, const motion::TransitionTriple& rest,
                             const BridgeOptions& options) {
  const auto r = step.F.rows();
  require(rest.F.rows() == r && step.Q.rows() == r && rest.Q.rows() == r, "bridge: triple dimension mismatch");
  require(step.h > 0.0, "bridge: step must be positive");
  if (rest.h < options.min_remaining) {
    throw RemainingTimeTooSmall("bridge: remaining time to arrival is below the minimum");
  }

  const Eigen::LLT<Matrix> step_llt = factor_covariance(step.Q, options, "Q_h");
  const Eigen::LLT<Matrix> rest_llt = factor_covariance(rest.Q, options, "Q_x");

  const Matrix identity = Matrix::Identity(r, r);
  const Matrix step_info = symmetrize(step_llt.solve(identity));
  const Matrix rest_info_F = rest_llt.solve(rest.F);  // Q_x^{-1} F_x
  const Matrix info = symmetrize(step_info + rest.F.transpose() * rest_info_F);

  Eigen::LLT<Matrix> info_llt(info);
  if (info_llt.info() != Eigen::Success) {
    throw NumericalError("bridge: conditional information matrix is not positive definite");
  }

  AugmentedTransition out;
  out.h = step.h;
  out.remaining = rest.h;
  out.R = Matrix::Zero(2 * r, 2 * r);
  out.R.topLeftCorner(r, r) = info_llt.solve(step_llt.solve(step.F));
  out.R.topRightCorner(r, r) = info_llt.solve(rest_info_F.transpose());
  out.R.bottomRightCorner(r, r) = identity;
  out.m = Vector::Zero(2 * r);
  out.m.head(r) = info_llt.solve(step_llt.solve(step.M) - rest_info_F.transpose() * rest.M);
  out.U = Matrix::Zero(2 * r, 2 * r);
  out.U.topLeftCorner(r, r) = symmetrize(info_llt.solve(identity));
  return out;
}

AugmentedTransition conditioned_transition(const motion::ModelParams& params, const motion::Destination& dest,
                                           double t, double h, double arrival, const BridgeOptions& options) {
  require(h > 0.0, "conditioned_transition: step must be positive");
  const double remaining = arrival - t - h;
  if (!(remaining >= options.min_remaining)) {
    throw RemainingTimeTooSmall("conditioned_transition: arrival time " + std::to_string(arrival) +
                                " is too close to t + h = " + std::to_string(t + h));
  }
  return assemble(motion::transition(params, h, dest), motion::transition(params, remaining, dest), options);
}

Matrix augmented_observation(const Matrix& G) {
  Matrix out = Matrix::Zero(G.rows(), 2 * G.cols());
  out.leftCols(G.cols()) = G;
  return out;
}

AugmentedPrior augmented_prior(const Gaussian& initial, const motion::Destination& dest) {
  const auto r = initial.mean.size();
  require(initial.cov.rows() == r && initial.cov.cols() == r, "augmented_prior: initial covariance shape");
  require(dest.mean.size() == r && dest.cov.rows() == r && dest.cov.cols() == r,
          "augmented_prior: destination dimension does not match the initial state");
  auto psd = [](const Matrix& m) {
    if (m.size() == 0) return true;
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return m.isApprox(m.transpose(), 1e-12) && min_eigenvalue(m) >= -1e-12 * scale;
  };
  require(psd(initial.cov), "augmented_prior: initial covariance is not symmetric PSD");
  require(psd(dest.cov), "augmented_prior: destination covariance is not symmetric PSD");

  AugmentedPrior out;
  out.mean.resize(2 * r);
  out.mean << initial.mean, dest.mean;
  out.cov = Matrix::Zero(2 * r, 2 * r);
  out.cov.topLeftCorner(r, r) = symmetrize(initial.cov);
  out.cov.bottomRightCorner(r, r) = symmetrize(dest.cov);
  return out;
}

GaussianProduct multiply_linear_gaussian(const Gaussian& prior, const Matrix& L, const Vector& mu2,
                                         const Matrix& S2) {
  const auto n = prior.mean.size();
  const auto k = mu2.size();
  require(prior.cov.rows() == n && L.rows() == k && L.cols() == n && S2.rows() == k && S2.cols() == k,
          "multiply_linear_gaussian: dimension mismatch");
  Eigen::LLT<Matrix> prior_llt(prior.cov);
  Eigen::LLT<Matrix> obs_llt(S2);
  if (prior_llt.info() != Eigen::Success || obs_llt.info() != Eigen::Success) {
    throw NumericalError("multiply_linear_gaussian: covariances must be positive definite");
  }
  const Matrix obs_info_L = obs_llt.solve(L);
  const Matrix info = symmetrize(prior_llt.solve(Matrix::Identity(n, n)) + L.transpose() * obs_info_L);
  Eigen::LLT<Matrix> info_llt(info);
  if (info_llt.info() != Eigen::Success) throw NumericalError("multiply_linear_gaussian: singular information");

  GaussianProduct out;
  out.cov = symmetrize(info_llt.solve(Matrix::Identity(n, n)));
  out.mean = info_llt.solve(prior_llt.solve(prior.mean) + L.transpose() * obs_llt.solve(mu2));
  out.log_z = log_normal_pdf(mu2, L * prior.mean, symmetrize(S2 + L * prior.cov * L.transpose()));
  return out;
}

}  // namespace bridgeintent::bridge

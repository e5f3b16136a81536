#include "bridgeintent/kalman.hpp"

#include <cmath>
#include <numbers>

namespace bridgeintent::kalman {

Gaussian predict(const Gaussian& belief, const LinearTransition& transition) {
  require(transition.matrix.cols() == belief.mean.size(), "kalman::predict: transition dimension mismatch");
  Gaussian out;
  out.mean = transition.matrix * belief.mean + transition.offset;
  out.cov = symmetrize(transition.matrix * belief.cov * transition.matrix.transpose() + transition.noise);
  return out;
}

StepResult correct(const Gaussian& predicted, const FilterState& previous, double t, const Vector& y,
                   const Matrix& G, const Matrix& V) {
  const auto k = y.size();
  const auto n = predicted.mean.size();
  require(G.rows() == k && G.cols() == n, "kalman: observation matrix dimension mismatch");
  require(V.rows() == k && V.cols() == k, "kalman: observation noise dimension mismatch");

  const Vector innovation = y - G * predicted.mean;
  const Matrix GP = G * predicted.cov;  // k x n
  const Matrix S = symmetrize(GP * G.transpose() + V);
  Eigen::LLT<Matrix> llt(S);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("kalman: innovation covariance is not positive definite");
  }
  const Matrix L = llt.matrixL();
  const double log_det = 2.0 * L.diagonal().array().log().sum();
  const Vector white = llt.matrixL().solve(innovation);
  const double log_ped =
      -0.5 * (static_cast<double>(k) * std::log(2.0 * std::numbers::pi) + log_det + white.squaredNorm());

  // K = P G' S^{-1}, from S K' = G P.
  const Matrix gain = llt.solve(GP).transpose();
  const Matrix I_KG = Matrix::Identity(n, n) - gain * G;

  StepResult out;
  out.log_ped = log_ped;
  out.state.mean = predicted.mean + gain * innovation;
  out.state.cov = symmetrize(I_KG * predicted.cov * I_KG.transpose() + gain * V * gain.transpose());
  out.state.log_lik = previous.log_lik + log_ped;
  out.state.n = previous.n + 1;
  out.state.t_last = t;
  out.state.active = true;
  return out;
}

StepResult kf_first(const bridge::AugmentedPrior& prior, double t, const Vector& y, const Matrix& G,
                    const Matrix& V) {
  return correct(prior, FilterState{}, t, y, G, V);
}

StepResult kf_step(const FilterState& state, double t, const Vector& y, const LinearTransition& transition,
                   const Matrix& G, const Matrix& V) {
  require(state.active, "kalman: kf_step on an inactive filter");
  return correct(predict(state.belief(), transition), state, t, y, G, V);
}

}  // namespace bridgeintent::kalman

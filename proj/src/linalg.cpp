#include "bridgeintent/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bridgeintent {

void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidInput(message);
}

double min_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double log_normal_pdf(const Vector& x, const Vector& mean, const Matrix& cov) {
  require(x.size() == mean.size() && cov.rows() == x.size() && cov.cols() == x.size(),
          "log_normal_pdf: dimension mismatch");
  const auto k = static_cast<double>(x.size());
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("log_normal_pdf: covariance is not positive definite");
  }
  const Vector white = llt.matrixL().solve(x - mean);
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * (k * std::log(2.0 * std::numbers::pi) + log_det + white.squaredNorm());
}

double log_sum_exp(std::span<const double> values) {
  double peak = kNegInf;
  for (double v : values) peak = std::max(peak, v);
  if (peak == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - peak);
  return peak + std::log(acc);
}

std::vector<double> normalize_log_weights(std::span<const double> log_weights) {
  const double total = log_sum_exp(log_weights);
  if (total == kNegInf) throw NumericalError("normalize_log_weights: all weights are zero");
  std::vector<double> out(log_weights.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(log_weights[i] - total);
    sum += out[i];
  }
  // exp rounding can leave |sum - 1| at a few ulp; fold it back in.
  for (double& w : out) w /= sum;
  return out;
}

Vector sample_gaussian(const Vector& mean, const Matrix& cov, const Vector& z) {
  require(cov.rows() == mean.size() && z.size() == mean.size(), "sample_gaussian: dimension mismatch");
  if (mean.size() == 0) return mean;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(cov));
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return mean + es.eigenvectors() * root.asDiagonal() * z;
}

}  // namespace bridgeintent

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bridgeintent {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Inputs whose shapes or values violate an operation's preconditions.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A factorization or solve failed beyond the configured regularization.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mean and covariance of a multivariate normal.
struct Gaussian {
  Vector mean;
  Matrix cov;

  [[nodiscard]] Eigen::Index dim() const { return mean.size(); }
};

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

/// Smallest eigenvalue of a symmetric matrix (0 for an empty matrix).
double min_eigenvalue(const Matrix& m);

/// log N(x; mean, cov). Throws NumericalError if cov is not positive definite.
double log_normal_pdf(const Vector& x, const Vector& mean, const Matrix& cov);

/// log(sum(exp(values))) with the max shift; -inf if every entry is -inf.
double log_sum_exp(std::span<const double> values);

/// exp-normalizes log weights into probabilities. Throws if all are -inf.
std::vector<double> normalize_log_weights(std::span<const double> log_weights);

/// Draws from N(mean, cov) given standard-normal draws `z` (cov may be singular).
Vector sample_gaussian(const Vector& mean, const Matrix& cov, const Vector& z);

void require(bool condition, const std::string& message);

}  // namespace bridgeintent

#pragma once

// Arrival-time priors and the fixed Simpson grid used to marginalize the
// arrival time.

#include "bridgeintent/linalg.hpp"

#include <span>
#include <vector>

namespace bridgeintent::quadrature {

/// p(T | D): uniform on [lower, upper] or a tabulated density that is
/// linearly interpolated between knots (zero outside them).
class ArrivalPrior {
 public:
  static ArrivalPrior uniform(double lower, double upper);
  static ArrivalPrior tabulated(std::vector<double> times, std::vector<double> density);

  [[nodiscard]] bool is_uniform() const { return uniform_; }
  [[nodiscard]] double lower() const { return lower_; }
  [[nodiscard]] double upper() const { return upper_; }
  [[nodiscard]] const std::vector<double>& knots() const { return times_; }
  [[nodiscard]] const std::vector<double>& knot_density() const { return density_; }

  /// Density at T (unnormalized for tabulated priors).
  [[nodiscard]] double density(double T) const;

 private:
  bool uniform_ = true;
  double lower_ = 0.0;
  double upper_ = 1.0;
  std::vector<double> times_;
  std::vector<double> density_;
};

/// q evenly spaced points over [lower, upper]; q = 1 gives {upper}.
std::vector<double> arrival_grid(double lower, double upper, int q);

/// (T_q - T_1)/(3(q-1)) * [1, 4, 2, 4, ..., 2, 4, 1]; {1} for q = 1.
std::vector<double> simpson_weights(std::span<const double> grid);

/// Prior density at the grid points, renormalized so that the Simpson rule
/// integrates it to one (q = 1: a unit point mass).
std::vector<double> prior_on_grid(const ArrivalPrior& prior, std::span<const double> grid);

/// log of the Simpson approximation of  int p(y | T) p(T) dT  from
/// per-point log-likelihoods (-inf allowed) and prior densities. For q = 1
/// returns log_likelihoods[0]. Throws NumericalError when every term is zero.
double simpson_log_marginal(std::span<const double> log_likelihoods, std::span<const double> prior_density,
                            std::span<const double> grid);

}  // namespace bridgeintent::quadrature

#include "bridgeintent/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace bridgeintent::quadrature {

ArrivalPrior ArrivalPrior::uniform(double lower, double upper) {
  require(std::isfinite(lower) && std::isfinite(upper) && lower < upper,
          "arrival prior: uniform bounds must satisfy t_a < t_b");
  ArrivalPrior p;
  p.uniform_ = true;
  p.lower_ = lower;
  p.upper_ = upper;
  return p;
}

ArrivalPrior ArrivalPrior::tabulated(std::vector<double> times, std::vector<double> density) {
  require(times.size() >= 2 && times.size() == density.size(),
          "arrival prior: histogram needs at least two (time, density) pairs");
  require(std::is_sorted(times.begin(), times.end()) &&
              std::adjacent_find(times.begin(), times.end()) == times.end(),
          "arrival prior: histogram times must be strictly increasing");
  require(std::all_of(density.begin(), density.end(), [](double d) { return d >= 0.0 && std::isfinite(d); }),
          "arrival prior: histogram densities must be non-negative");
  require(std::any_of(density.begin(), density.end(), [](double d) { return d > 0.0; }),
          "arrival prior: histogram has no mass");
  ArrivalPrior p;
  p.uniform_ = false;
  p.lower_ = times.front();
  p.upper_ = times.back();
  p.times_ = std::move(times);
  p.density_ = std::move(density);
  return p;
}

double ArrivalPrior::density(double T) const {
  if (T < lower_ || T > upper_) return 0.0;
  if (uniform_) return 1.0 / (upper_ - lower_);
  const auto hi = std::upper_bound(times_.begin(), times_.end(), T);
  if (hi == times_.end()) return density_.back();
  const auto j = static_cast<std::size_t>(hi - times_.begin());
  const double frac = (T - times_[j - 1]) / (times_[j] - times_[j - 1]);
  return density_[j - 1] + frac * (density_[j] - density_[j - 1]);
}

std::vector<double> arrival_grid(double lower, double upper, int q) {
  require(q == 1 || (q >= 3 && q % 2 == 1), "arrival grid: q must be 1 or odd and >= 3");
  require(lower < upper, "arrival grid: lower must be below upper");
  if (q == 1) return {upper};
  std::vector<double> grid(static_cast<std::size_t>(q));
  const double step = (upper - lower) / (q - 1);
  for (int i = 0; i < q; ++i) grid[static_cast<std::size_t>(i)] = lower + step * i;
  grid.back() = upper;
  return grid;
}

std::vector<double> simpson_weights(std::span<const double> grid) {
  const auto q = grid.size();
  require(q == 1 || (q >= 3 && q % 2 == 1), "simpson: q must be 1 or odd and >= 3");
  if (q == 1) return {1.0};
  const double scale = (grid.back() - grid.front()) / (3.0 * static_cast<double>(q - 1));
  std::vector<double> w(q);
  for (std::size_t i = 0; i < q; ++i) {
    const double coeff = (i == 0 || i + 1 == q) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    w[i] = scale * coeff;
  }
  return w;
}

std::vector<double> prior_on_grid(const ArrivalPrior& prior, std::span<const double> grid) {
  if (grid.size() == 1) return {1.0};
  const auto weights = simpson_weights(grid);
  std::vector<double> out(grid.size());
  double total = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out[i] = prior.density(grid[i]);
    total += weights[i] * out[i];
  }
  require(total > 0.0, "arrival prior has no mass on the quadrature grid");
  for (double& v : out) v /= total;
  return out;
}

double simpson_log_marginal(std::span<const double> log_likelihoods, std::span<const double> prior_density,
                            std::span<const double> grid) {
  const auto q = grid.size();
  require(log_likelihoods.size() == q && prior_density.size() == q, "simpson: length mismatch");
  if (q == 1) {
    if (log_likelihoods[0] == kNegInf) throw NumericalError("simpson: all quadrature terms are zero");
    return log_likelihoods[0];
  }
  const auto weights = simpson_weights(grid);
  std::vector<double> terms(q, kNegInf);
  for (std::size_t i = 0; i < q; ++i) {
    if (prior_density[i] > 0.0 && log_likelihoods[i] != kNegInf) {
      terms[i] = log_likelihoods[i] + std::log(weights[i] * prior_density[i]);
    }
  }
  const double out = log_sum_exp(terms);
  if (out == kNegInf) throw NumericalError("simpson: all quadrature terms are zero");
  return out;
}

}  // namespace bridgeintent::quadrature

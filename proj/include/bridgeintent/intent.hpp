#pragma once

// Destination inference engine: an N x q bank of conditioned Kalman filters,
// one per (destination, arrival-time quadrature point), with posteriors over
// destination, arrival time, current state and future state.

#include "bridgeintent/bridge.hpp"
#include "bridgeintent/kalman.hpp"
#include "bridgeintent/linalg.hpp"
#include "bridgeintent/motion_models.hpp"
#include "bridgeintent/quadrature.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bridgeintent::intent {

/// Every quadrature point lies before the current time.
class ArrivalWindowExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An observation time did not advance past the previous one.
class TimeRegression : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

struct Scenario {
  std::string name;
  std::vector<std::string> destination_ids;
  std::vector<motion::Destination> destinations;
  motion::ModelParams model;
  std::vector<quadrature::ArrivalPrior> arrival_priors;  // one shared entry, or one per destination
  Matrix obs_noise;
  Gaussian initial;

  [[nodiscard]] std::size_t size() const { return destinations.size(); }
  [[nodiscard]] int obs_dims() const { return model.spatial_dims; }
  [[nodiscard]] const quadrature::ArrivalPrior& arrival_prior(std::size_t d) const;
  /// Union of the arrival-prior supports.
  [[nodiscard]] double arrival_lower() const;
  [[nodiscard]] double arrival_upper() const;
  [[nodiscard]] Matrix observation_matrix() const;
  void validate() const;
};

struct BankOptions {
  int q = 15;
  /// Replaces the evenly spaced grid (e.g. a single known arrival time).
  std::optional<std::vector<double>> arrival_grid;
  bridge::BridgeOptions bridge;
  int threads = 1;
};

struct Posteriors {
  double t = 0.0;
  int n = 0;
  std::vector<double> dest_probs;                     // u_d
  int map = 0;
  std::vector<double> arrival;                        // v_i, overall
  std::vector<std::vector<double>> arrival_by_dest;   // w_i for each destination
  std::vector<std::vector<double>> cell_weights;      // u_{i,d}, indexed [d][i]
  std::vector<double> log_marginals;                  // log p(y_{1:n} | D = d)
};

struct MixtureComponent {
  double weight = 0.0;
  std::size_t dest = 0;
  std::size_t point = 0;
  bool arrived = false;  // held at its arrival distribution
  Gaussian belief;
};

struct GaussianMixture {
  std::vector<MixtureComponent> components;

  [[nodiscard]] double total_weight() const;
  [[nodiscard]] Vector mean() const;
  [[nodiscard]] Matrix covariance() const;
  /// Mixture restricted to the first `dims` coordinates.
  [[nodiscard]] GaussianMixture head(Eigen::Index dims) const;
  /// Density at x; each component covariance gets `floor` * I added.
  [[nodiscard]] double density(const Vector& x, double floor = 0.0) const;
  /// Moment-matched Gaussian per destination, weighted by its total mass.
  [[nodiscard]] std::vector<std::pair<double, Gaussian>> by_destination(std::size_t n_dest) const;
};

class FilterBank {
 public:
  FilterBank(Scenario scenario, BankOptions options = {});

  /// Processes observation y at time t > t_now and returns the posteriors.
  Posteriors update(double t, const Vector& y);

  [[nodiscard]] Posteriors posteriors() const;
  [[nodiscard]] std::vector<double> destination_posterior() const;
  /// w_i for one destination, or v_i over all destinations.
  [[nodiscard]] std::vector<double> arrival_posterior(std::optional<std::size_t> dest = std::nullopt) const;
  [[nodiscard]] GaussianMixture state_estimate() const;
  [[nodiscard]] GaussianMixture predict_future(double t_star) const;

  [[nodiscard]] const Scenario& scenario() const { return scenario_; }
  [[nodiscard]] const BankOptions& options() const { return options_; }
  [[nodiscard]] int q() const { return static_cast<int>(grid_.size()); }
  [[nodiscard]] const std::vector<double>& arrival_grid() const { return grid_; }
  [[nodiscard]] double t_now() const { return t_now_; }
  [[nodiscard]] int observations() const { return n_; }
  [[nodiscard]] const kalman::FilterState& cell(std::size_t dest, std::size_t point) const;
  [[nodiscard]] const std::vector<kalman::FilterState>& cells() const { return cells_; }
  [[nodiscard]] std::size_t active_cells() const;

  /// Rebuilds a bank from saved cell states.
  static FilterBank restore(Scenario scenario, BankOptions options, std::vector<kalman::FilterState> cells,
                            double t_now, int n);

 private:
  [[nodiscard]] std::size_t index(std::size_t dest, std::size_t point) const { return dest * grid_.size() + point; }
  [[nodiscard]] std::vector<double> log_marginals() const;

  Scenario scenario_;
  BankOptions options_;
  std::vector<double> grid_;
  std::vector<std::vector<double>> log_prior_T_;  // [d][i], log p(T_i | d) on the grid
  std::vector<double> log_prior_D_;
  Matrix G_;
  Matrix G_aug_;
  std::vector<kalman::FilterState> cells_;
  double t_now_;
  int n_ = 0;
};

FilterBank init_bank(const Scenario& scenario, int q);

/// Normalized destination posterior from log p(y|D=d) and prior masses.
std::vector<double> destination_posterior(std::span<const double> log_marginals, std::span<const double> prior);

/// argmax with ties broken toward the lowest index.
std::size_t map_destination(std::span<const double> probs);

}  // namespace bridgeintent::intent

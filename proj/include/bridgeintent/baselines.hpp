#pragma once

// Destination predictors sharing one interface: the bridged filter bank and
// the nearest-neighbour, bearing-angle and unbridged-filter benchmarks.

#include "bridgeintent/intent.hpp"
#include "bridgeintent/linalg.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bridgeintent::baselines {

struct BaselineParams {
  double nn_variance = 1.0;  // sigma_NN^2, squared position units
  double ba_variance = 0.1;  // sigma_BA^2, radians^2
};

/// log N(y; p_d, variance * I) for each destination position.
std::vector<double> nn_update(const Vector& y, std::span<const Vector> positions, double variance);

/// Angle in [0, pi] between two vectors; 0 if either has zero length.
double angle_between(const Vector& a, const Vector& b);

/// log N(theta_d; 0, variance), theta_d the angle between the step
/// y - y_prev and the bearing p_d - y. A zero-length step gives zeros.
std::vector<double> ba_update(const Vector& y, const Vector& y_prev, std::span<const Vector> positions,
                              double variance);

enum class Method { Bridge, NN, BA, MRDNoBridge };

Method parse_method(std::string_view name);
std::string_view to_string(Method method);

class DestinationPredictor {
 public:
  virtual ~DestinationPredictor() = default;
  /// Absorbs one observation and returns the normalized destination posterior.
  virtual std::vector<double> update(double t, const Vector& y) = 0;
  /// Overall arrival-time weights on the bank grid; empty for benchmarks.
  [[nodiscard]] virtual std::vector<double> arrival() const { return {}; }
  [[nodiscard]] virtual std::vector<double> arrival_grid() const { return {}; }
};

class BridgePredictor final : public DestinationPredictor {
 public:
  BridgePredictor(const intent::Scenario& scenario, const intent::BankOptions& options);
  std::vector<double> update(double t, const Vector& y) override;
  [[nodiscard]] std::vector<double> arrival() const override { return last_.arrival; }
  [[nodiscard]] std::vector<double> arrival_grid() const override { return bank_.arrival_grid(); }
  [[nodiscard]] const intent::FilterBank& bank() const { return bank_; }

 private:
  intent::FilterBank bank_;
  intent::Posteriors last_;
};

class NearestNeighbour final : public DestinationPredictor {
 public:
  NearestNeighbour(const intent::Scenario& scenario, double variance);
  std::vector<double> update(double t, const Vector& y) override;

 private:
  std::vector<Vector> positions_;
  std::vector<double> log_post_;
  double variance_;
};

class BearingAngle final : public DestinationPredictor {
 public:
  BearingAngle(const intent::Scenario& scenario, double variance);
  std::vector<double> update(double t, const Vector& y) override;

 private:
  std::vector<Vector> positions_;
  std::vector<double> log_post_;
  std::optional<Vector> previous_;
  double variance_;
};

/// Plain forward Kalman filter per destination with the scenario's motion
/// model and no endpoint conditioning. Only destination-dependent models
/// (MRD, ERV) can discriminate; for BM/CV the posterior stays at the prior.
class UnbridgedFilter final : public DestinationPredictor {
 public:
  explicit UnbridgedFilter(const intent::Scenario& scenario);
  std::vector<double> update(double t, const Vector& y) override;

 private:
  intent::Scenario scenario_;
  std::vector<kalman::FilterState> filters_;
  Matrix G_;
  double t_last_ = 0.0;
  bool started_ = false;
};

std::unique_ptr<DestinationPredictor> make_predictor(Method method, const intent::Scenario& scenario,
                                                     const intent::BankOptions& options,
                                                     const BaselineParams& params = {});

/// Destination position blocks of a scenario (first s coordinates of a_d).
std::vector<Vector> destination_positions(const intent::Scenario& scenario);

/// Maximum-likelihood sigma_NN^2 and sigma_BA^2 from labelled training
/// observations (closed-form argmax of the benchmark likelihoods).
struct LabelledPath {
  std::vector<Vector> ys;
  std::size_t dest = 0;
};
BaselineParams fit_baselines(const intent::Scenario& scenario, std::span<const LabelledPath> paths);

}  // namespace bridgeintent::baselines

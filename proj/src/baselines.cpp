#include "bridgeintent/baselines.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

namespace bridgeintent::baselines {

namespace {

std::vector<double> log_prior(const intent::Scenario& scenario) {
  std::vector<double> out;
  out.reserve(scenario.size());
  for (const auto& d : scenario.destinations) out.push_back(d.prior_mass > 0.0 ? std::log(d.prior_mass) : kNegInf);
  return out;
}

}  // namespace

std::vector<Vector> destination_positions(const intent::Scenario& scenario) {
  std::vector<Vector> out;
  out.reserve(scenario.size());
  for (const auto& d : scenario.destinations) out.push_back(d.mean.head(scenario.model.spatial_dims));
  return out;
}

std::vector<double> nn_update(const Vector& y, std::span<const Vector> positions, double variance) {
  require(variance > 0.0, "nn_update: variance must be positive");
  const double k = static_cast<double>(y.size());
  const double norm = -0.5 * k * std::log(2.0 * std::numbers::pi * variance);
  std::vector<double> out;
  out.reserve(positions.size());
  for (const auto& p : positions) {
    require(p.size() == y.size(), "nn_update: dimension mismatch");
    out.push_back(norm - 0.5 * (y - p).squaredNorm() / variance);
  }
  return out;
}

double angle_between(const Vector& a, const Vector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  // atan2 form stays accurate near 0 and pi, unlike acos of the cosine
  const double dot = a.dot(b);
  const double cross = std::sqrt(std::max(0.0, na * na * nb * nb - dot * dot));
  return std::atan2(cross, dot);
}

std::vector<double> ba_update(const Vector& y, const Vector& y_prev, std::span<const Vector> positions,
                              double variance) {
  require(variance > 0.0, "ba_update: variance must be positive");
  require(y.size() == y_prev.size(), "ba_update: dimension mismatch");
  const Vector step = y - y_prev;
  if (step.squaredNorm() == 0.0) return std::vector<double>(positions.size(), 0.0);
  const double norm = -0.5 * std::log(2.0 * std::numbers::pi * variance);
  std::vector<double> out;
  out.reserve(positions.size());
  for (const auto& p : positions) {
    const double theta = angle_between(step, p - y);
    out.push_back(norm - 0.5 * theta * theta / variance);
  }
  return out;
}

Method parse_method(std::string_view name) {
  std::string lower(name);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "bridge") return Method::Bridge;
  if (lower == "nn") return Method::NN;
  if (lower == "ba") return Method::BA;
  if (lower == "mrd-nobridge" || lower == "nobridge") return Method::MRDNoBridge;
  throw InvalidInput("unknown method '" + std::string(name) + "' (expected bridge, nn, ba or mrd-nobridge)");
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::Bridge: return "bridge";
    case Method::NN: return "nn";
    case Method::BA: return "ba";
    case Method::MRDNoBridge: return "mrd-nobridge";
  }
  return "?";
}

BridgePredictor::BridgePredictor(const intent::Scenario& scenario, const intent::BankOptions& options)
    : bank_(scenario, options) {}

std::vector<double> BridgePredictor::update(double t, const Vector& y) {
  last_ = bank_.update(t, y);
  return last_.dest_probs;
}

NearestNeighbour::NearestNeighbour(const intent::Scenario& scenario, double variance)
    : positions_(destination_positions(scenario)), log_post_(log_prior(scenario)), variance_(variance) {
  require(variance > 0.0, "nearest neighbour: variance must be positive");
}

std::vector<double> NearestNeighbour::update(double, const Vector& y) {
  const auto inc = nn_update(y, positions_, variance_);
  for (std::size_t d = 0; d < inc.size(); ++d) log_post_[d] += inc[d];
  return normalize_log_weights(log_post_);
}

BearingAngle::BearingAngle(const intent::Scenario& scenario, double variance)
    : positions_(destination_positions(scenario)), log_post_(log_prior(scenario)), variance_(variance) {
  require(variance > 0.0, "bearing angle: variance must be positive");
}

std::vector<double> BearingAngle::update(double, const Vector& y) {
  if (previous_) {
    const auto inc = ba_update(y, *previous_, positions_, variance_);
    for (std::size_t d = 0; d < inc.size(); ++d) log_post_[d] += inc[d];
  }
  previous_ = y;
  return normalize_log_weights(log_post_);
}

UnbridgedFilter::UnbridgedFilter(const intent::Scenario& scenario)
    : scenario_(scenario), G_(scenario.observation_matrix()) {
  scenario_.validate();
  filters_.resize(scenario_.size());
  for (auto& f : filters_) {
    f.mean = scenario_.initial.mean;
    f.cov = scenario_.initial.cov;
  }
}

std::vector<double> UnbridgedFilter::update(double t, const Vector& y) {
  if (started_ && !(t > t_last_)) throw intent::TimeRegression("unbridged filter: observation time does not advance");
  std::vector<double> terms(filters_.size());
  for (std::size_t d = 0; d < filters_.size(); ++d) {
    if (!started_) {
      filters_[d] = kalman::kf_first(filters_[d].belief(), t, y, G_, scenario_.obs_noise).state;
    } else {
      const auto tr = motion::transition(scenario_.model, t - t_last_, scenario_.destinations[d]);
      filters_[d] = kalman::kf_step(filters_[d], t, y, kalman::as_linear(tr), G_, scenario_.obs_noise).state;
    }
    const double mass = scenario_.destinations[d].prior_mass;
    terms[d] = mass > 0.0 ? filters_[d].log_lik + std::log(mass) : kNegInf;
  }
  started_ = true;
  t_last_ = t;
  return normalize_log_weights(terms);
}

std::unique_ptr<DestinationPredictor> make_predictor(Method method, const intent::Scenario& scenario,
                                                     const intent::BankOptions& options,
                                                     const BaselineParams& params) {
  switch (method) {
    case Method::Bridge: return std::make_unique<BridgePredictor>(scenario, options);
    case Method::NN: return std::make_unique<NearestNeighbour>(scenario, params.nn_variance);
    case Method::BA: return std::make_unique<BearingAngle>(scenario, params.ba_variance);
    case Method::MRDNoBridge: return std::make_unique<UnbridgedFilter>(scenario);
  }
  throw InvalidInput("make_predictor: unknown method");
}

BaselineParams fit_baselines(const intent::Scenario& scenario, std::span<const LabelledPath> paths) {
  require(!paths.empty(), "fit_baselines: empty training set");
  const auto positions = destination_positions(scenario);
  double nn_sum = 0.0;
  double nn_count = 0.0;
  double ba_sum = 0.0;
  double ba_count = 0.0;
  for (const auto& path : paths) {
    require(path.dest < positions.size(), "fit_baselines: destination index out of range");
    const Vector& p = positions[path.dest];
    for (std::size_t n = 0; n < path.ys.size(); ++n) {
      nn_sum += (path.ys[n] - p).squaredNorm();
      nn_count += static_cast<double>(p.size());
      if (n == 0) continue;
      const Vector step = path.ys[n] - path.ys[n - 1];
      if (step.squaredNorm() == 0.0) continue;
      const double theta = angle_between(step, p - path.ys[n]);
      ba_sum += theta * theta;
      ba_count += 1.0;
    }
  }
  BaselineParams out;
  if (nn_count > 0.0 && nn_sum > 0.0) out.nn_variance = nn_sum / nn_count;
  if (ba_count > 0.0 && ba_sum > 0.0) out.ba_variance = ba_sum / ba_count;
  return out;
}

}  // namespace bridgeintent::baselines

#pragma once

// Synthetic ground truth: tracks sampled from the bridged model and noisy
// position observations of them.

#include "bridgeintent/bridge.hpp"
#include "bridgeintent/intent.hpp"
#include "bridgeintent/linalg.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace bridgeintent::simulate {

using Rng = std::mt19937_64;

struct Track {
  std::string id;
  std::vector<double> times;   // ascending; the last entry is true_T
  std::vector<Vector> states;  // X at each time; the last one is X_T
  std::size_t true_dest = 0;
  double true_T = 0.0;
  std::uint64_t seed = 0;
};

struct ObservationSet {
  std::vector<double> times;
  std::vector<Vector> ys;
  Matrix noise;

  [[nodiscard]] std::size_t size() const { return times.size(); }
};

/// Draws x_0 from the scenario's initial prior and X_T ~ N(a_d, Sigma_d),
/// then samples forward on t0, t0 + dt, ... from the conditioned transition.
/// The track ends with (T, X_T) exactly.
Track sample_bridged_track(const intent::Scenario& scenario, std::size_t dest, double T, double dt, Rng& rng,
                           double t0 = 0.0, const bridge::BridgeOptions& options = {});

/// y_n = G x_n + v_n at every `every`-th state strictly before arrival.
ObservationSet observe(const Track& track, const intent::Scenario& scenario, const Matrix& V, Rng& rng,
                       int every = 1, const bridge::BridgeOptions& options = {});

/// Random draw from p(T | D = d).
double sample_arrival_time(const quadrature::ArrivalPrior& prior, Rng& rng);
/// Random destination index from the prior masses.
std::size_t sample_destination(const intent::Scenario& scenario, Rng& rng);

struct SimulatedTrack {
  Track track;
  ObservationSet obs;
};

/// n tracks; track j uses its own generator seeded from (seed, j), so any
/// track can be replayed alone. Destinations and arrival times are drawn
/// from the scenario priors.
std::vector<SimulatedTrack> simulate_tracks(const intent::Scenario& scenario, int n, std::uint64_t seed, double dt,
                                            int threads = 1);
SimulatedTrack simulate_track(const intent::Scenario& scenario, std::uint64_t seed, std::size_t index, double dt);

std::string track_id(std::size_t index);

}  // namespace bridgeintent::simulate

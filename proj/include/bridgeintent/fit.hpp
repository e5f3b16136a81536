#pragma once

// Grid-search maximum likelihood for motion-model parameters from tracks
// with known destination and arrival time.

#include "bridgeintent/intent.hpp"
#include "bridgeintent/simulate.hpp"

#include <span>
#include <vector>

namespace bridgeintent::fit {

struct LabelledTrack {
  simulate::ObservationSet obs;
  std::size_t dest = 0;
  double T = 0.0;
};

/// Candidate values per parameter, shared across spatial dimensions. An
/// empty list keeps the scenario's value.
struct ParamGrid {
  std::vector<double> reversion;  // lambda (MRD)
  std::vector<double> spring;     // eta (ERV)
  std::vector<double> drag;       // rho (ERV)
  std::vector<double> noise;      // sigma (scalar multiple of I)

  [[nodiscard]] std::size_t size() const;
};

/// Grid of n evenly spaced values lo, lo + step, ..., hi.
std::vector<double> linear_grid(double lo, double hi, double step);

struct GridPoint {
  motion::ModelParams params;
  double log_lik = 0.0;
};

struct FitResult {
  motion::ModelParams params;
  double log_lik = 0.0;
  std::vector<GridPoint> table;  // every grid point, in grid order
};

/// sum_j log p(y^j | D = d_j, T_j, params) through a one-destination,
/// one-arrival-time bank per track.
double training_log_likelihood(const intent::Scenario& scenario, const motion::ModelParams& params,
                               std::span<const LabelledTrack> tracks);

/// Grid argmax; ties go to the smaller parameter norm, then the earlier
/// grid point.
FitResult fit_params(const intent::Scenario& scenario, std::span<const LabelledTrack> tracks, const ParamGrid& grid,
                     int threads = 1);

}  // namespace bridgeintent::fit

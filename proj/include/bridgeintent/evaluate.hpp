#pragma once

// Evaluation quantities: success series, success-versus-progress curves,
// proportion correct, the quadrature-count study, arrival-time concentration
// and a separation measure for predicted mixtures.

#include "bridgeintent/baselines.hpp"
#include "bridgeintent/intent.hpp"
#include "bridgeintent/simulate.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace bridgeintent::evaluate {

/// One row of a posterior log.
struct PosteriorRecord {
  double t = 0.0;
  std::vector<double> dest_probs;
  std::vector<double> arrival;  // v_i; empty for the benchmark methods
  int map = 0;
};

/// Runs a predictor over an observation sequence and returns one record per
/// observation.
std::vector<PosteriorRecord> run_predictor(baselines::DestinationPredictor& predictor,
                                           const simulate::ObservationSet& obs);

std::vector<int> success_series(std::span<const int> map_history, int true_dest);
std::vector<int> success_series(std::span<const PosteriorRecord> history, int true_dest);
/// Mean of S(t_n); 0 for an empty series.
double proportion_correct(std::span<const int> series);

struct TrackSeries {
  std::vector<double> times;
  std::vector<int> success;
  double start = 0.0;
  double arrival = 0.0;  // true T
};

struct SuccessCurve {
  std::vector<double> centres;               // bin centres in percent
  std::vector<std::optional<double>> mean;   // missing where no track has data
  std::vector<double> track_proportions;     // per-track proportion correct
  double mean_proportion = 0.0;
  double std_proportion = 0.0;               // sample standard deviation
};

/// Assigns each observation to one of `bins` equal progress bins
/// 100 (t - start) / (T - start), averages within a track and then across
/// the tracks that have data in the bin.
SuccessCurve progress_curve(std::span<const TrackSeries> tracks, int bins = 50);

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation
  std::size_t n = 0;
};
Summary summarize(std::span<const double> values);

struct QuadStudyRow {
  int q = 0;
  Summary proportion;
  std::vector<double> per_track;
};

/// Simulates n_tracks from the scenario once and scores the bridge bank at
/// each q on the same tracks.
std::vector<QuadStudyRow> quadrature_study(const intent::Scenario& scenario, std::span<const int> qs, int n_tracks,
                                           std::uint64_t seed, double dt, int threads = 1);

/// Proportion correct of one method on one simulated track.
double track_proportion(const intent::Scenario& scenario, const simulate::ObservationSet& obs, std::size_t true_dest,
                        baselines::Method method, const intent::BankOptions& options,
                        const baselines::BaselineParams& params = {});

/// Posterior mass on grid points within `window` of the true arrival time.
double arrival_mass_near(std::span<const double> grid, std::span<const double> weights, double true_T,
                         double window);

struct ModeSeparation {
  std::size_t modes = 0;          // destination groups carrying >= min_weight
  double max_separation = 0.0;    // largest pooled-Mahalanobis distance between two of them
  std::size_t dip_pairs = 0;      // pairs with a density dip between their means
};

/// Groups the predicted components by destination, moment-matches each
/// group's position marginal, and measures how far apart the heavy groups
/// are in covariance-scaled units.
ModeSeparation mode_separation(const intent::GaussianMixture& mixture, std::size_t n_dest, Eigen::Index dims,
                               double min_weight = 0.05, double separation = 5.0);

}  // namespace bridgeintent::evaluate

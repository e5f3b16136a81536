#include "bridgeintent/evaluate.hpp"

#include "bridgeintent/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bridgeintent::evaluate {

std::vector<PosteriorRecord> run_predictor(baselines::DestinationPredictor& predictor,
                                           const simulate::ObservationSet& obs) {
  std::vector<PosteriorRecord> out;
  out.reserve(obs.size());
  for (std::size_t n = 0; n < obs.size(); ++n) {
    PosteriorRecord rec;
    rec.t = obs.times[n];
    rec.dest_probs = predictor.update(obs.times[n], obs.ys[n]);
    rec.arrival = predictor.arrival();
    rec.map = static_cast<int>(intent::map_destination(rec.dest_probs));
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<int> success_series(std::span<const int> map_history, int true_dest) {
  std::vector<int> out(map_history.size());
  std::transform(map_history.begin(), map_history.end(), out.begin(),
                 [&](int m) { return m == true_dest ? 1 : 0; });
  return out;
}

std::vector<int> success_series(std::span<const PosteriorRecord> history, int true_dest) {
  std::vector<int> maps(history.size());
  std::transform(history.begin(), history.end(), maps.begin(), [](const auto& r) { return r.map; });
  return success_series(maps, true_dest);
}

double proportion_correct(std::span<const int> series) {
  if (series.empty()) return 0.0;
  return static_cast<double>(std::accumulate(series.begin(), series.end(), 0)) /
         static_cast<double>(series.size());
}

Summary summarize(std::span<const double> values) {
  Summary s;
  s.n = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

SuccessCurve progress_curve(std::span<const TrackSeries> tracks, int bins) {
  require(bins >= 1, "progress_curve: need at least one bin");
  const auto nb = static_cast<std::size_t>(bins);
  SuccessCurve curve;
  curve.centres.resize(nb);
  const double width = 100.0 / bins;
  for (std::size_t b = 0; b < nb; ++b) curve.centres[b] = width * (static_cast<double>(b) + 0.5);

  std::vector<double> bin_sum(nb, 0.0);
  std::vector<int> bin_tracks(nb, 0);
  for (const auto& tr : tracks) {
    require(tr.times.size() == tr.success.size(), "progress_curve: times and series differ in length");
    require(tr.arrival > tr.start, "progress_curve: arrival must follow the start");
    std::vector<double> sum(nb, 0.0);
    std::vector<int> count(nb, 0);
    for (std::size_t n = 0; n < tr.times.size(); ++n) {
      const double p = 100.0 * (tr.times[n] - tr.start) / (tr.arrival - tr.start);
      const auto b = static_cast<std::size_t>(std::clamp(std::floor(p / width), 0.0, static_cast<double>(nb - 1)));
      sum[b] += tr.success[n];
      ++count[b];
    }
    for (std::size_t b = 0; b < nb; ++b) {
      if (count[b] == 0) continue;
      bin_sum[b] += sum[b] / count[b];
      ++bin_tracks[b];
    }
    curve.track_proportions.push_back(proportion_correct(tr.success));
  }
  curve.mean.resize(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    if (bin_tracks[b] > 0) curve.mean[b] = bin_sum[b] / bin_tracks[b];
  }
  const auto s = summarize(curve.track_proportions);
  curve.mean_proportion = s.mean;
  curve.std_proportion = s.std;
  return curve;
}

double track_proportion(const intent::Scenario& scenario, const simulate::ObservationSet& obs, std::size_t true_dest,
                        baselines::Method method, const intent::BankOptions& options,
                        const baselines::BaselineParams& params) {
  auto predictor = baselines::make_predictor(method, scenario, options, params);
  const auto history = run_predictor(*predictor, obs);
  const auto series = success_series(history, static_cast<int>(true_dest));
  return proportion_correct(series);
}

std::vector<QuadStudyRow> quadrature_study(const intent::Scenario& scenario, std::span<const int> qs, int n_tracks,
                                           std::uint64_t seed, double dt, int threads) {
  require(!qs.empty(), "quadrature_study: empty q list");
  const auto tracks = simulate::simulate_tracks(scenario, n_tracks, seed, dt, threads);
  std::vector<QuadStudyRow> rows;
  for (int q : qs) {
    QuadStudyRow row;
    row.q = q;
    row.per_track.resize(tracks.size());
    intent::BankOptions options;
    options.q = q;
    parallel_for(tracks.size(), threads, [&](std::size_t j) {
      row.per_track[j] = track_proportion(scenario, tracks[j].obs, tracks[j].track.true_dest,
                                          baselines::Method::Bridge, options);
    });
    row.proportion = summarize(row.per_track);
    rows.push_back(std::move(row));
  }
  return rows;
}

double arrival_mass_near(std::span<const double> grid, std::span<const double> weights, double true_T,
                         double window) {
  require(grid.size() == weights.size(), "arrival_mass_near: length mismatch");
  double mass = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (std::abs(grid[i] - true_T) <= window) mass += weights[i];
  }
  return mass;
}

ModeSeparation mode_separation(const intent::GaussianMixture& mixture, std::size_t n_dest, Eigen::Index dims,
                               double min_weight, double separation) {
  const auto positions = mixture.head(dims);
  const double total = positions.total_weight();
  require(total > 0.0, "mode_separation: empty mixture");
  const auto groups = positions.by_destination(n_dest);
  std::vector<const Gaussian*> heavy;
  for (const auto& [w, g] : groups) {
    if (w / total >= min_weight) heavy.push_back(&g);
  }
  ModeSeparation out;
  out.modes = heavy.size();
  // a small floor keeps the density finite for point-mass components
  const double floor = 1e-9;
  for (std::size_t a = 0; a < heavy.size(); ++a) {
    for (std::size_t b = a + 1; b < heavy.size(); ++b) {
      const Vector delta = heavy[a]->mean - heavy[b]->mean;
      const Matrix pooled = 0.5 * (heavy[a]->cov + heavy[b]->cov) + floor * Matrix::Identity(dims, dims);
      const double dist = std::sqrt(delta.dot(Eigen::LDLT<Matrix>(pooled).solve(delta)));
      out.max_separation = std::max(out.max_separation, dist);
      if (dist <= separation) continue;
      const double da = positions.density(heavy[a]->mean, floor);
      const double db = positions.density(heavy[b]->mean, floor);
      double lowest = std::min(da, db);
      for (int k = 1; k < 40; ++k) {
        const Vector x = heavy[b]->mean + (k / 40.0) * delta;
        lowest = std::min(lowest, positions.density(x, floor));
      }
      if (lowest < 0.5 * std::min(da, db)) ++out.dip_pairs;
    }
  }
  return out;
}

}  // namespace bridgeintent::evaluate

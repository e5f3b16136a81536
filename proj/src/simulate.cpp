#include "bridgeintent/simulate.hpp"

#include "bridgeintent/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace bridgeintent::simulate {

namespace {

Vector standard_normal(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> z;
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = z(rng);
  return v;
}

Vector draw(const Vector& mean, const Matrix& cov, Rng& rng) {
  return sample_gaussian(mean, cov, standard_normal(mean.size(), rng));
}

}  // namespace

std::string track_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "t%03zu", index + 1);
  return buf;
}

Track sample_bridged_track(const intent::Scenario& scenario, std::size_t dest, double T, double dt, Rng& rng,
                           double t0, const bridge::BridgeOptions& options) {
  scenario.validate();
  require(dest < scenario.size(), "sample_bridged_track: destination index out of range");
  require(dt > 0.0, "sample_bridged_track: dt must be positive");
  require(T > t0, "sample_bridged_track: arrival time must follow the start time");
  const auto& d = scenario.destinations[dest];

  Track track;
  track.true_dest = dest;
  track.true_T = T;
  const Vector x_T = draw(d.mean, d.cov, rng);
  Vector x = draw(scenario.initial.mean, scenario.initial.cov, rng);
  double t = t0;
  track.times.push_back(t);
  track.states.push_back(x);

  const auto r = x.size();
  Vector z(2 * r);
  for (long step = 1;; ++step) {
    const double next = t0 + static_cast<double>(step) * dt;
    if (T - next < options.min_remaining) break;
    const auto tr = bridge::conditioned_transition(scenario.model, d, t, next - t, T, options);
    z << x, x_T;
    x = draw(tr.H() * z + tr.offset(), tr.C(), rng);
    t = next;
    track.times.push_back(t);
    track.states.push_back(x);
  }
  track.times.push_back(T);
  track.states.push_back(x_T);
  return track;
}

ObservationSet observe(const Track& track, const intent::Scenario& scenario, const Matrix& V, Rng& rng, int every,
                       const bridge::BridgeOptions& options) {
  require(every >= 1, "observe: sampling stride must be >= 1");
  const Matrix G = scenario.observation_matrix();
  require(V.rows() == G.rows() && V.cols() == G.rows(), "observe: noise covariance must be k x k");
  ObservationSet out;
  out.noise = V;
  for (std::size_t n = 0; n < track.times.size(); n += static_cast<std::size_t>(every)) {
    if (track.true_T - track.times[n] < options.min_remaining) break;
    out.times.push_back(track.times[n]);
    out.ys.push_back(draw(G * track.states[n], V, rng));
  }
  return out;
}

double sample_arrival_time(const quadrature::ArrivalPrior& prior, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (prior.is_uniform()) return prior.lower() + (prior.upper() - prior.lower()) * u(rng);
  // Inverse CDF of the piecewise-linear density, segment by segment.
  const auto& t = prior.knots();
  const auto& f = prior.knot_density();
  std::vector<double> mass(t.size() - 1);
  double total = 0.0;
  for (std::size_t j = 0; j + 1 < t.size(); ++j) {
    mass[j] = 0.5 * (f[j] + f[j + 1]) * (t[j + 1] - t[j]);
    total += mass[j];
  }
  double target = u(rng) * total;
  std::size_t j = 0;
  while (j + 1 < mass.size() && target > mass[j]) target -= mass[j++];
  const double w = t[j + 1] - t[j];
  const double a = f[j];
  const double slope = (f[j + 1] - f[j]) / w;
  // solve a x + slope x^2 / 2 = target on [0, w]
  double x;
  if (std::abs(slope) < 1e-300) {
    x = a > 0.0 ? target / a : 0.5 * w;
  } else {
    const double disc = std::max(0.0, a * a + 2.0 * slope * target);
    x = (std::sqrt(disc) - a) / slope;
  }
  return t[j] + std::clamp(x, 0.0, w);
}

std::size_t sample_destination(const intent::Scenario& scenario, Rng& rng) {
  std::vector<double> masses;
  for (const auto& d : scenario.destinations) masses.push_back(d.prior_mass);
  std::discrete_distribution<std::size_t> pick(masses.begin(), masses.end());
  return pick(rng);
}

SimulatedTrack simulate_track(const intent::Scenario& scenario, std::uint64_t seed, std::size_t index, double dt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  Rng rng(seq);
  const std::size_t dest = sample_destination(scenario, rng);
  const double T = sample_arrival_time(scenario.arrival_prior(dest), rng);
  SimulatedTrack out;
  out.track = sample_bridged_track(scenario, dest, T, dt, rng);
  out.track.id = track_id(index);
  out.track.seed = seed;
  out.obs = observe(out.track, scenario, scenario.obs_noise, rng);
  return out;
}

std::vector<SimulatedTrack> simulate_tracks(const intent::Scenario& scenario, int n, std::uint64_t seed, double dt,
                                            int threads) {
  require(n >= 0, "simulate_tracks: track count must be >= 0");
  std::vector<SimulatedTrack> out(static_cast<std::size_t>(n));
  parallel_for(out.size(), threads, [&](std::size_t j) { out[j] = simulate_track(scenario, seed, j, dt); });
  return out;
}

}  // namespace bridgeintent::simulate

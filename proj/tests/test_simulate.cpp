#include "doctest.h"

#include "bridgeintent/simulate.hpp"
#include "scenarios.hpp"

#include <cmath>

using namespace bridgeintent;
using namespace bridgeintent::simulate;
using fixtures::point_scenario;
using motion::ModelParams;

namespace {

intent::Scenario pinned_bm(double sigma, double T) {
  auto sc = point_scenario(ModelParams::brownian(1, sigma), {Vector::Constant(1, 0.0)}, T, T + 1.0);
  sc.initial.cov.setZero();
  return sc;
}

}  // namespace

TEST_CASE("bridged track ends at its arrival state") {
  auto sc = point_scenario(ModelParams::constant_velocity(2, 1.0), {Vector{{30.0, 0.0}}, Vector{{-30.0, 0.0}}}, 20, 40);
  Rng rng(5);
  const auto tr = sample_bridged_track(sc, 1, 23.5, 2.0, rng);
  CHECK(tr.times.front() == 0.0);
  CHECK(tr.times.back() == 23.5);
  CHECK(tr.times[tr.times.size() - 2] == 22.0);
  CHECK(tr.states.size() == tr.times.size());
  CHECK(tr.states.back() == sc.destinations[1].mean);
  for (std::size_t n = 1; n + 1 < tr.times.size(); ++n) CHECK(tr.times[n] - tr.times[n - 1] == 2.0);

  SUBCASE("observations stop before arrival") {
    const auto obs = observe(tr, sc, sc.obs_noise, rng);
    CHECK(obs.size() == tr.times.size() - 1);
    CHECK(obs.times.back() == 22.0);
    const auto sparse = observe(tr, sc, sc.obs_noise, rng, 3);
    CHECK(sparse.times == std::vector<double>{0, 6, 12, 18});
  }
  SUBCASE("an arrival on the sampling grid is not duplicated") {
    const auto exact = sample_bridged_track(sc, 0, 24.0, 2.0, rng);
    CHECK(exact.times[exact.times.size() - 2] == 22.0);
    CHECK(exact.times.back() == 24.0);
  }
  CHECK_THROWS_AS(sample_bridged_track(sc, 2, 23.5, 2.0, rng), InvalidInput);
  CHECK_THROWS_AS(sample_bridged_track(sc, 0, 0.0, 2.0, rng), InvalidInput);
}

TEST_CASE("Brownian bridge moments by Monte Carlo") {
  // X_0 = 0, X_1 = 0: X_{1/2} ~ N(0, sigma^2 / 4)
  const double sigma = 2.0;
  const auto sc = pinned_bm(sigma, 1.0);
  Rng rng(2024);
  const int n = 10000;
  double s1 = 0.0;
  double s2 = 0.0;
  for (int k = 0; k < n; ++k) {
    const auto tr = sample_bridged_track(sc, 0, 1.0, 0.5, rng);
    REQUIRE(tr.times.size() == 3);
    const double x = tr.states[1](0);
    s1 += x;
    s2 += x * x;
  }
  const double mean = s1 / n;
  const double var = (s2 - n * mean * mean) / (n - 1);
  const double expected = 0.25 * sigma * sigma;
  CHECK(std::abs(mean) < 3.0 * std::sqrt(expected / n));
  CHECK(std::abs(var - expected) < 3.0 * expected * std::sqrt(2.0 / (n - 1)));
}

TEST_CASE("replay is deterministic") {
  const auto sc = fixtures::harbour_scenario();
  const auto a = simulate_track(sc, 7, 3, 1.0);
  const auto b = simulate_track(sc, 7, 3, 1.0);
  CHECK(a.track.id == "t004");
  CHECK(a.track.times == b.track.times);
  CHECK(a.obs.times == b.obs.times);
  for (std::size_t n = 0; n < a.obs.size(); ++n) CHECK(a.obs.ys[n] == b.obs.ys[n]);

  const auto batch = simulate_tracks(sc, 6, 7, 1.0, 1);
  const auto threaded = simulate_tracks(sc, 6, 7, 1.0, 3);
  REQUIRE(batch.size() == 6);
  for (std::size_t j = 0; j < batch.size(); ++j) {
    CHECK(batch[j].track.true_T == threaded[j].track.true_T);
    CHECK(batch[j].obs.ys.back() == threaded[j].obs.ys.back());
  }
  CHECK(batch[3].obs.ys.back() == a.obs.ys.back());
  CHECK(batch[2].track.true_T != batch[3].track.true_T);
  CHECK(simulate_tracks(sc, 1, 8, 1.0)[0].track.true_T != simulate_tracks(sc, 1, 7, 1.0)[0].track.true_T);
  CHECK(track_id(0) == "t001");
  CHECK(track_id(99) == "t100");
}

TEST_CASE("arrival time sampling") {
  Rng rng(9);
  SUBCASE("uniform") {
    const auto prior = quadrature::ArrivalPrior::uniform(50, 250);
    double lo = 1e9;
    double hi = -1e9;
    double s = 0.0;
    const int n = 20000;
    for (int k = 0; k < n; ++k) {
      const double T = sample_arrival_time(prior, rng);
      lo = std::min(lo, T);
      hi = std::max(hi, T);
      s += T;
    }
    CHECK(lo >= 50.0);
    CHECK(hi <= 250.0);
    CHECK(std::abs(s / n - 150.0) < 3.0 * (200.0 / std::sqrt(12.0)) / std::sqrt(n));
  }
  SUBCASE("tabulated density 2T on [0, 1]") {
    const auto prior = quadrature::ArrivalPrior::tabulated({0.0, 0.5, 1.0}, {0.0, 1.0, 2.0});
    const int n = 20000;
    double s = 0.0;
    double below_half = 0.0;
    for (int k = 0; k < n; ++k) {
      const double T = sample_arrival_time(prior, rng);
      CHECK(T >= 0.0);
      CHECK(T <= 1.0);
      s += T;
      below_half += T < 0.5 ? 1.0 : 0.0;
    }
    // mean 2/3, sd 1/sqrt(18); P(T < 1/2) = 1/4
    CHECK(std::abs(s / n - 2.0 / 3.0) < 3.0 * std::sqrt(1.0 / 18.0 / n));
    CHECK(std::abs(below_half / n - 0.25) < 3.0 * std::sqrt(0.25 * 0.75 / n));
  }
}

TEST_CASE("destination sampling follows the prior masses") {
  auto sc = point_scenario(ModelParams::brownian(1, 1.0),
                           {Vector::Constant(1, 0.0), Vector::Constant(1, 1.0), Vector::Constant(1, 2.0)});
  sc.destinations[0].prior_mass = 0.2;
  sc.destinations[1].prior_mass = 0.5;
  sc.destinations[2].prior_mass = 0.3;
  Rng rng(4);
  std::vector<int> counts(3, 0);
  const int n = 20000;
  for (int k = 0; k < n; ++k) ++counts[sample_destination(sc, rng)];
  for (std::size_t d = 0; d < 3; ++d) {
    const double p = sc.destinations[d].prior_mass;
    CHECK(std::abs(counts[d] / static_cast<double>(n) - p) < 3.5 * std::sqrt(p * (1 - p) / n));
  }
}

TEST_CASE("sampler and filter agree") {
  // Normalized estimation error of the known-destination, known-T filter on
  // tracks drawn from the same bridged model averages the state dimension.
  const auto sc = point_scenario(ModelParams::constant_velocity(2, 1.0), {Vector{{40.0, 10.0}}}, 30, 31, 0.5);
  const int tracks = 300;
  double nees = 0.0;
  for (int j = 0; j < tracks; ++j) {
    const auto sim = simulate_track(sc, 77, static_cast<std::size_t>(j), 1.0);
    intent::BankOptions opts;
    opts.arrival_grid = std::vector<double>{sim.track.true_T};
    intent::FilterBank bank(sc, opts);
    const std::size_t stop = 12;
    for (std::size_t n = 0; n <= stop; ++n) bank.update(sim.obs.times[n], sim.obs.ys[n]);
    const auto est = bank.state_estimate();
    const Vector err = sim.track.states[stop] - est.mean();
    nees += err.dot(est.covariance().ldlt().solve(err));
  }
  nees /= tracks;
  const double r = 4.0;
  CHECK(std::abs(nees - r) < 4.0 * std::sqrt(2.0 * r / tracks));
}

#include "bridgeintent/fit.hpp"

#include "bridgeintent/parallel.hpp"

#include <cmath>

namespace bridgeintent::fit {

std::size_t ParamGrid::size() const {
  auto n = [](const std::vector<double>& v) { return std::max<std::size_t>(1, v.size()); };
  return n(reversion) * n(spring) * n(drag) * n(noise);
}

std::vector<double> linear_grid(double lo, double hi, double step) {
  require(step > 0.0 && hi >= lo, "linear_grid: need lo <= hi and a positive step");
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = lo + step * static_cast<double>(i);
  return out;
}

double training_log_likelihood(const intent::Scenario& scenario, const motion::ModelParams& params,
                               std::span<const LabelledTrack> tracks) {
  double total = 0.0;
  for (const auto& tr : tracks) {
    require(tr.dest < scenario.size(), "fit: destination index out of range");
    require(tr.obs.size() > 0, "fit: a training track has no observations");
    intent::Scenario single = scenario;
    single.model = params;
    single.destinations = {scenario.destinations[tr.dest]};
    single.destinations[0].prior_mass = 1.0;
    single.destination_ids.clear();
    single.arrival_priors = {scenario.arrival_prior(tr.dest)};
    intent::BankOptions options;
    options.arrival_grid = std::vector<double>{tr.T};
    intent::FilterBank bank(std::move(single), options);
    for (std::size_t n = 0; n < tr.obs.size(); ++n) bank.update(tr.obs.times[n], tr.obs.ys[n]);
    total += bank.cells().front().log_lik;
  }
  return total;
}

FitResult fit_params(const intent::Scenario& scenario, std::span<const LabelledTrack> tracks, const ParamGrid& grid,
                     int threads) {
  require(!tracks.empty(), "fit_params: empty training set");
  const auto& base = scenario.model;
  const int s = base.spatial_dims;
  auto values = [](const std::vector<double>& v) { return v.empty() ? std::vector<double>{NAN} : v; };
  const auto lam = values(grid.reversion);
  const auto eta = values(grid.spring);
  const auto rho = values(grid.drag);
  const auto sig = values(grid.noise);

  std::vector<GridPoint> table;
  table.reserve(grid.size());
  for (double l : lam) {
    for (double e : eta) {
      for (double r : rho) {
        for (double g : sig) {
          motion::ModelParams p = base;
          if (!std::isnan(l)) p.reversion = Vector::Constant(s, l);
          if (!std::isnan(e)) p.spring = Vector::Constant(s, e);
          if (!std::isnan(r)) p.drag = Vector::Constant(s, r);
          if (!std::isnan(g)) p.noise = g * Matrix::Identity(s, s);
          p.validate();
          table.push_back({p, 0.0});
        }
      }
    }
  }

  parallel_for(table.size(), threads, [&](std::size_t i) {
    table[i].log_lik = training_log_likelihood(scenario, table[i].params, tracks);
  });

  auto norm = [](const motion::ModelParams& p) {
    double n2 = p.noise.squaredNorm();
    if (p.reversion.size()) n2 += p.reversion.squaredNorm();
    if (p.spring.size()) n2 += p.spring.squaredNorm();
    if (p.drag.size()) n2 += p.drag.squaredNorm();
    return n2;
  };
  std::size_t best = 0;
  for (std::size_t i = 1; i < table.size(); ++i) {
    const double a = table[i].log_lik;
    const double b = table[best].log_lik;
    if (a > b || (a == b && norm(table[i].params) < norm(table[best].params))) best = i;
  }
  FitResult out;
  out.params = table[best].params;
  out.log_lik = table[best].log_lik;
  out.table = std::move(table);
  return out;
}

}  // namespace bridgeintent::fit

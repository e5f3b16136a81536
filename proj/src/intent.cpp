#include "bridgeintent/intent.hpp"

#include "bridgeintent/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace bridgeintent::intent {

namespace {

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

bool any_finite(std::span<const double> values) {
  return std::any_of(values.begin(), values.end(), [](double v) { return v != kNegInf; });
}

}  // namespace

// ---- Scenario ---------------------------------------------------------------

const quadrature::ArrivalPrior& Scenario::arrival_prior(std::size_t d) const {
  return arrival_priors.size() == 1 ? arrival_priors.front() : arrival_priors.at(d);
}

double Scenario::arrival_lower() const {
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& p : arrival_priors) lo = std::min(lo, p.lower());
  return lo;
}

double Scenario::arrival_upper() const {
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& p : arrival_priors) hi = std::max(hi, p.upper());
  return hi;
}

Matrix Scenario::observation_matrix() const { return motion::observation_matrix(model, obs_dims()); }

void Scenario::validate() const {
  model.validate();
  require(!destinations.empty(), "scenario: at least one destination is required");
  require(destination_ids.empty() || destination_ids.size() == destinations.size(),
          "scenario: destination id count does not match destinations");
  const int r = model.state_dim();
  double mass = 0.0;
  for (const auto& d : destinations) {
    require(d.mean.size() == r && d.cov.rows() == r && d.cov.cols() == r,
            "scenario: destination dimension does not match the model state");
    require(d.prior_mass >= 0.0 && std::isfinite(d.prior_mass), "scenario: destination prior must be >= 0");
    mass += d.prior_mass;
  }
  require(std::abs(mass - 1.0) <= 1e-9, "scenario: destination priors must sum to 1");
  require(arrival_priors.size() == 1 || arrival_priors.size() == destinations.size(),
          "scenario: give one shared arrival prior or one per destination");
  const int k = obs_dims();
  require(obs_noise.rows() == k && obs_noise.cols() == k, "scenario: observation noise must be k x k");
  require(min_eigenvalue(obs_noise) >= -1e-12 * std::max(1.0, obs_noise.cwiseAbs().maxCoeff()),
          "scenario: observation noise must be PSD");
  require(initial.mean.size() == r && initial.cov.rows() == r && initial.cov.cols() == r,
          "scenario: initial prior dimension does not match the model state");
}

// ---- GaussianMixture --------------------------------------------------------

double GaussianMixture::total_weight() const {
  double w = 0.0;
  for (const auto& c : components) w += c.weight;
  return w;
}

Vector GaussianMixture::mean() const {
  require(!components.empty(), "mixture: no components");
  Vector m = Vector::Zero(components.front().belief.dim());
  for (const auto& c : components) m += c.weight * c.belief.mean;
  return m / total_weight();
}

Matrix GaussianMixture::covariance() const {
  const Vector m = mean();
  Matrix cov = Matrix::Zero(m.size(), m.size());
  for (const auto& c : components) {
    const Vector dev = c.belief.mean - m;
    cov += c.weight * (c.belief.cov + dev * dev.transpose());
  }
  return symmetrize(cov / total_weight());
}

GaussianMixture GaussianMixture::head(Eigen::Index dims) const {
  GaussianMixture out;
  out.components.reserve(components.size());
  for (const auto& c : components) {
    MixtureComponent h = c;
    h.belief.mean = c.belief.mean.head(dims);
    h.belief.cov = c.belief.cov.topLeftCorner(dims, dims);
    out.components.push_back(std::move(h));
  }
  return out;
}

double GaussianMixture::density(const Vector& x, double floor) const {
  double total = 0.0;
  for (const auto& c : components) {
    if (c.weight <= 0.0) continue;
    Matrix cov = c.belief.cov;
    cov.diagonal().array() += floor;
    total += c.weight * std::exp(log_normal_pdf(x, c.belief.mean, cov));
  }
  return total;
}

std::vector<std::pair<double, Gaussian>> GaussianMixture::by_destination(std::size_t n_dest) const {
  std::vector<GaussianMixture> groups(n_dest);
  for (const auto& c : components) groups.at(c.dest).components.push_back(c);
  std::vector<std::pair<double, Gaussian>> out;
  out.reserve(n_dest);
  for (const auto& g : groups) {
    const double w = g.total_weight();
    if (g.components.empty() || w <= 0.0) {
      out.emplace_back(0.0, Gaussian{});
    } else {
      out.emplace_back(w, Gaussian{g.mean(), g.covariance()});
    }
  }
  return out;
}

// ---- FilterBank -------------------------------------------------------------

FilterBank::FilterBank(Scenario scenario, BankOptions options)
    : scenario_(std::move(scenario)), options_(std::move(options)), t_now_(kNegInf) {
  scenario_.validate();
  if (options_.arrival_grid) {
    grid_ = *options_.arrival_grid;
    require(!grid_.empty(), "bank: arrival grid is empty");
    require(std::is_sorted(grid_.begin(), grid_.end()), "bank: arrival grid must be ascending");
    require(grid_.size() == 1 || grid_.size() % 2 == 1, "bank: arrival grid size must be 1 or odd");
    options_.q = static_cast<int>(grid_.size());
  } else {
    grid_ = quadrature::arrival_grid(scenario_.arrival_lower(), scenario_.arrival_upper(), options_.q);
  }

  const std::size_t N = scenario_.size();
  log_prior_T_.resize(N);
  log_prior_D_.resize(N);
  for (std::size_t d = 0; d < N; ++d) {
    const auto density = quadrature::prior_on_grid(scenario_.arrival_prior(d), grid_);
    log_prior_T_[d].resize(grid_.size());
    std::transform(density.begin(), density.end(), log_prior_T_[d].begin(), safe_log);
    log_prior_D_[d] = safe_log(scenario_.destinations[d].prior_mass);
  }

  G_ = scenario_.observation_matrix();
  G_aug_ = bridge::augmented_observation(G_);

  cells_.reserve(N * grid_.size());
  for (std::size_t d = 0; d < N; ++d) {
    const auto prior = bridge::augmented_prior(scenario_.initial, scenario_.destinations[d]);
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      kalman::FilterState cell;
      cell.mean = prior.mean;
      cell.cov = prior.cov;
      cells_.push_back(std::move(cell));
    }
  }
}

FilterBank FilterBank::restore(Scenario scenario, BankOptions options, std::vector<kalman::FilterState> cells,
                               double t_now, int n) {
  FilterBank bank(std::move(scenario), std::move(options));
  require(cells.size() == bank.cells_.size(), "bank restore: cell count does not match N x q");
  const auto dim = bank.cells_.front().mean.size();
  for (const auto& c : cells) {
    require(c.mean.size() == dim && c.cov.rows() == dim && c.cov.cols() == dim,
            "bank restore: cell dimension mismatch");
  }
  bank.cells_ = std::move(cells);
  bank.t_now_ = t_now;
  bank.n_ = n;
  return bank;
}

FilterBank init_bank(const Scenario& scenario, int q) {
  BankOptions options;
  options.q = q;
  return FilterBank(scenario, options);
}

const kalman::FilterState& FilterBank::cell(std::size_t dest, std::size_t point) const {
  require(dest < scenario_.size() && point < grid_.size(), "bank: cell index out of range");
  return cells_[index(dest, point)];
}

std::size_t FilterBank::active_cells() const {
  return static_cast<std::size_t>(std::count_if(cells_.begin(), cells_.end(), [](const auto& c) { return c.active; }));
}

Posteriors FilterBank::update(double t, const Vector& y) {
  require(std::isfinite(t), "bank update: observation time must be finite");
  require(y.size() == scenario_.obs_dims(), "bank update: observation dimension mismatch");
  if (n_ > 0 && !(t > t_now_)) {
    throw TimeRegression("bank update: observation time " + std::to_string(t) +
                         " does not advance past " + std::to_string(t_now_));
  }

  const std::size_t N = scenario_.size();
  const std::size_t q = grid_.size();
  const double min_remaining = options_.bridge.min_remaining;

  std::vector<char> point_live(q, 0);
  for (std::size_t i = 0; i < q; ++i) point_live[i] = grid_[i] - t >= min_remaining ? 1 : 0;
  std::vector<std::size_t> work;
  for (std::size_t d = 0; d < N; ++d) {
    for (std::size_t i = 0; i < q; ++i) {
      if (cells_[index(d, i)].active && point_live[i]) work.push_back(index(d, i));
    }
  }
  if (work.empty()) {
    throw ArrivalWindowExceeded("arrival window exceeded: no arrival time remains after t = " + std::to_string(t));
  }

  std::vector<kalman::FilterState> next = cells_;
  const auto& model = scenario_.model;
  const auto& dests = scenario_.destinations;

  if (n_ == 0) {
    parallel_for(work.size(), options_.threads, [&](std::size_t w) {
      const std::size_t c = work[w];
      const auto prior = cells_[c].belief();
      next[c] = kalman::kf_first(prior, t, y, G_aug_, scenario_.obs_noise).state;
    });
  } else {
    const double h = t - t_now_;
    // F and Q of both triples are shared by all destinations; only M varies.
    const auto step = motion::transition(model, h, dests.front());
    std::vector<std::optional<motion::TransitionTriple>> rest(q);
    for (std::size_t i = 0; i < q; ++i) {
      if (point_live[i]) rest[i] = motion::transition(model, grid_[i] - t, dests.front());
    }
    std::vector<std::optional<bridge::AugmentedTransition>> shared(q);
    if (model.destination_free()) {
      for (std::size_t i = 0; i < q; ++i) {
        if (point_live[i]) shared[i] = bridge::assemble(step, *rest[i], options_.bridge);
      }
    }
    parallel_for(work.size(), options_.threads, [&](std::size_t w) {
      const std::size_t c = work[w];
      const std::size_t d = c / q;
      const std::size_t i = c % q;
      if (shared[i]) {
        next[c] = kalman::kf_step(cells_[c], t, y, *shared[i], G_aug_, scenario_.obs_noise).state;
        return;
      }
      motion::TransitionTriple step_d = step;
      motion::TransitionTriple rest_d = *rest[i];
      step_d.M = motion::transition_offset(model, step_d, dests[d]);
      rest_d.M = motion::transition_offset(model, rest_d, dests[d]);
      const auto trans = bridge::assemble(step_d, rest_d, options_.bridge);
      next[c] = kalman::kf_step(cells_[c], t, y, trans, G_aug_, scenario_.obs_noise).state;
    });
  }

  for (std::size_t d = 0; d < N; ++d) {
    for (std::size_t i = 0; i < q; ++i) {
      auto& cell = next[index(d, i)];
      if (!point_live[i] && cell.active) {
        cell.active = false;
        cell.log_lik = kNegInf;
      }
    }
  }
  cells_ = std::move(next);
  t_now_ = t;
  ++n_;
  return posteriors();
}

std::vector<double> FilterBank::log_marginals() const {
  const std::size_t N = scenario_.size();
  const std::size_t q = grid_.size();
  std::vector<double> out(N, kNegInf);
  std::vector<double> loglik(q);
  std::vector<double> density(q);
  for (std::size_t d = 0; d < N; ++d) {
    for (std::size_t i = 0; i < q; ++i) {
      const auto& c = cells_[index(d, i)];
      loglik[i] = c.active ? c.log_lik : kNegInf;
      density[i] = std::exp(log_prior_T_[d][i]);
    }
    bool any = false;
    for (std::size_t i = 0; i < q; ++i) any = any || (loglik[i] != kNegInf && density[i] > 0.0);
    if (any) out[d] = quadrature::simpson_log_marginal(loglik, density, grid_);
  }
  return out;
}

std::vector<double> destination_posterior(std::span<const double> log_marginals, std::span<const double> prior) {
  require(log_marginals.size() == prior.size(), "destination_posterior: length mismatch");
  std::vector<double> terms(prior.size());
  for (std::size_t d = 0; d < prior.size(); ++d) {
    terms[d] = (prior[d] > 0.0 && log_marginals[d] != kNegInf) ? log_marginals[d] + std::log(prior[d]) : kNegInf;
  }
  return normalize_log_weights(terms);
}

std::size_t map_destination(std::span<const double> probs) {
  require(!probs.empty(), "map_destination: empty posterior");
  std::size_t best = 0;
  for (std::size_t d = 1; d < probs.size(); ++d) {
    if (probs[d] > probs[best]) best = d;
  }
  return best;
}

Posteriors FilterBank::posteriors() const {
  const std::size_t N = scenario_.size();
  const std::size_t q = grid_.size();
  Posteriors out;
  out.t = t_now_;
  out.n = n_;
  out.log_marginals = log_marginals();

  std::vector<double> prior(N);
  for (std::size_t d = 0; d < N; ++d) prior[d] = scenario_.destinations[d].prior_mass;
  out.dest_probs = intent::destination_posterior(out.log_marginals, prior);
  out.map = static_cast<int>(map_destination(out.dest_probs));

  std::vector<double> joint(N * q, kNegInf);
  out.arrival_by_dest.assign(N, std::vector<double>(q, 0.0));
  std::vector<double> per_dest(q);
  for (std::size_t d = 0; d < N; ++d) {
    for (std::size_t i = 0; i < q; ++i) {
      const auto& c = cells_[index(d, i)];
      per_dest[i] = c.active ? c.log_lik + log_prior_T_[d][i] : kNegInf;
      joint[index(d, i)] = per_dest[i] + log_prior_D_[d];
    }
    if (any_finite(per_dest)) out.arrival_by_dest[d] = normalize_log_weights(per_dest);
  }
  const auto weights = normalize_log_weights(joint);
  out.cell_weights.assign(N, std::vector<double>(q, 0.0));
  out.arrival.assign(q, 0.0);
  for (std::size_t d = 0; d < N; ++d) {
    for (std::size_t i = 0; i < q; ++i) {
      out.cell_weights[d][i] = weights[index(d, i)];
      out.arrival[i] += weights[index(d, i)];
    }
  }
  return out;
}

std::vector<double> FilterBank::destination_posterior() const { return posteriors().dest_probs; }

std::vector<double> FilterBank::arrival_posterior(std::optional<std::size_t> dest) const {
  const auto post = posteriors();
  if (dest) return post.arrival_by_dest.at(*dest);
  return post.arrival;
}

GaussianMixture FilterBank::state_estimate() const {
  const auto post = posteriors();
  const auto r = static_cast<Eigen::Index>(scenario_.model.state_dim());
  GaussianMixture mix;
  for (std::size_t d = 0; d < scenario_.size(); ++d) {
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      const auto& c = cells_[index(d, i)];
      if (!c.active || post.cell_weights[d][i] <= 0.0) continue;
      MixtureComponent comp;
      comp.weight = post.cell_weights[d][i];
      comp.dest = d;
      comp.point = i;
      comp.belief = {c.mean.head(r), c.cov.topLeftCorner(r, r)};
      mix.components.push_back(std::move(comp));
    }
  }
  return mix;
}

GaussianMixture FilterBank::predict_future(double t_star) const {
  require(n_ > 0, "predict_future: no observation has been processed");
  require(t_star > t_now_, "predict_future: t* must be after the last observation");
  const auto post = posteriors();
  const auto& model = scenario_.model;
  const auto r = static_cast<Eigen::Index>(model.state_dim());
  const double min_remaining = options_.bridge.min_remaining;

  double latest = kNegInf;
  for (std::size_t d = 0; d < scenario_.size(); ++d) {
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      if (cells_[index(d, i)].active) latest = std::max(latest, grid_[i]);
    }
  }
  require(t_star <= latest, "predict_future: t* lies beyond every arrival time");

  const auto step = motion::transition(model, t_star - t_now_, scenario_.destinations.front());
  GaussianMixture mix;
  for (std::size_t d = 0; d < scenario_.size(); ++d) {
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      const auto& c = cells_[index(d, i)];
      if (!c.active || post.cell_weights[d][i] <= 0.0) continue;
      MixtureComponent comp;
      comp.weight = post.cell_weights[d][i];
      comp.dest = d;
      comp.point = i;
      if (grid_[i] - t_star < min_remaining) {
        // Already arrived by t*: the state is X_T.
        comp.arrived = true;
        comp.belief = {c.mean.tail(r), c.cov.bottomRightCorner(r, r)};
      } else {
        motion::TransitionTriple step_d = step;
        auto rest = motion::transition(model, grid_[i] - t_star, scenario_.destinations[d]);
        step_d.M = motion::transition_offset(model, step_d, scenario_.destinations[d]);
        const auto trans = bridge::assemble(step_d, rest, options_.bridge);
        const auto predicted = kalman::predict(c.belief(), kalman::as_linear(trans));
        comp.belief = {predicted.mean.head(r), predicted.cov.topLeftCorner(r, r)};
      }
      mix.components.push_back(std::move(comp));
    }
  }
  return mix;
}

}  // namespace bridgeintent::intent

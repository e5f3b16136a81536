#include "bridgeintent/cli.hpp"

#include "bridgeintent/baselines.hpp"
#include "bridgeintent/evaluate.hpp"
#include "bridgeintent/fit.hpp"
#include "bridgeintent/format.hpp"
#include "bridgeintent/scenario_io.hpp"
#include "bridgeintent/server.hpp"
#include "bridgeintent/snapshot.hpp"
#include "bridgeintent/track_io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace bridgeintent::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Error while processing one named track.
struct TrackError : std::runtime_error {
  TrackError(const std::string& id, const std::string& what, int code)
      : std::runtime_error("track " + id + ": " + what), exit_code(code) {}
  int exit_code;
};

struct Common {
  std::string scenario;
  std::optional<double> noise_std;
  int threads = 1;
};

io::ScenarioFile load(const Common& c) {
  if (c.scenario.empty()) throw UsageError("--scenario is required");
  auto file = io::load_scenario(c.scenario);
  if (c.noise_std) {
    const auto k = file.scenario.obs_dims();
    file.scenario.obs_noise = (*c.noise_std) * (*c.noise_std) * Matrix::Identity(k, k);
  }
  return file;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw io::DataError(path.string() + ": cannot write file");
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("not an integer list: \"" + text + "\"");
    }
  }
  if (out.empty()) throw UsageError("empty list");
  return out;
}

std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("not a number list: \"" + text + "\"");
    }
  }
  if (out.empty()) throw UsageError("empty list");
  return out;
}

// ---- simulate

struct SimulateArgs {
  Common common;
  std::optional<int> tracks;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::string out = "tracks";
};

int simulate_cmd(const SimulateArgs& a, std::ostream& out) {
  const auto file = load(a.common);
  const int n = a.tracks.value_or(file.simulation.tracks);
  const auto seed = a.seed.value_or(file.simulation.seed);
  const double dt = a.dt.value_or(file.simulation.dt);
  if (n < 1) throw UsageError("--tracks must be positive");
  if (!(dt > 0.0)) throw UsageError("--dt must be positive");
  const auto tracks = simulate::simulate_tracks(file.scenario, n, seed, dt, a.common.threads);
  io::write_tracks(a.out, file.scenario, tracks, a.common.scenario, seed, dt);
  out << "wrote " << tracks.size() << " tracks to " << a.out << " (seed " << seed << ")\n";
  return kOk;
}

// ---- infer

struct InferArgs {
  Common common;
  std::string track;       // id or path of one observation file
  std::string tracks_dir;  // manifest directory for batch runs or id lookup
  int q = 0;
  std::string method = "bridge";
  std::string out;
  std::string snapshot_out;
  double nn_var = baselines::BaselineParams{}.nn_variance;
  double ba_var = baselines::BaselineParams{}.ba_variance;
};

std::vector<evaluate::PosteriorRecord> infer_one(const intent::Scenario& sc, const simulate::ObservationSet& obs,
                                                 const InferArgs& a, const std::string& id,
                                                 const intent::BankOptions& options) {
  const auto method = baselines::parse_method(a.method);
  auto predictor = baselines::make_predictor(method, sc, options, {a.nn_var, a.ba_var});
  try {
    auto records = evaluate::run_predictor(*predictor, obs);
    if (!a.snapshot_out.empty()) {
      const auto* bridge = dynamic_cast<const baselines::BridgePredictor*>(predictor.get());
      if (!bridge) throw UsageError("--snapshot-out needs --method bridge");
      io::save_snapshot(a.snapshot_out, bridge->bank());
    }
    return records;
  } catch (const intent::ArrivalWindowExceeded& e) {
    throw TrackError(id, e.what(), kDataError);
  } catch (const intent::TimeRegression& e) {
    throw TrackError(id, e.what(), kDataError);
  } catch (const NumericalError& e) {
    throw TrackError(id, e.what(), kNumerical);
  }
}

fs::path observation_path(const std::string& track, const std::string& dir) {
  if (fs::is_regular_file(track)) return track;
  const fs::path base = dir.empty() ? fs::path(".") : fs::path(dir);
  const auto path = base / (track + ".obs.csv");
  if (!fs::is_regular_file(path)) throw io::DataError("track " + track + ": no file " + path.string());
  return path;
}

int infer_cmd(const InferArgs& a, std::ostream& out) {
  const auto file = load(a.common);
  const auto& sc = file.scenario;
  intent::BankOptions options;
  options.q = a.q > 0 ? a.q : file.simulation.q;
  options.threads = a.common.threads;
  try {
    (void)baselines::parse_method(a.method);
  } catch (const InvalidInput& ex) {
    throw UsageError(ex.what());
  }

  if (!a.track.empty()) {
    const auto path = observation_path(a.track, a.tracks_dir);
    const auto id = path.stem().stem().string();
    const auto obs = io::read_observations(path, sc.obs_dims(), sc.obs_noise);
    const auto records = infer_one(sc, obs, a, id, options);
    if (a.out.empty()) {
      io::write_posterior_log(out, records, sc.destination_ids);
    } else {
      auto f = open_out(a.out);
      io::write_posterior_log(f, records, sc.destination_ids);
    }
    return kOk;
  }
  if (a.tracks_dir.empty()) throw UsageError("infer needs --track or --tracks");
  if (!a.snapshot_out.empty()) throw UsageError("--snapshot-out applies to a single --track");
  const auto manifest = io::load_manifest(fs::path(a.tracks_dir) / "manifest.json");
  const fs::path out_dir = a.out.empty() ? fs::path(a.tracks_dir) : fs::path(a.out);
  fs::create_directories(out_dir);
  for (const auto& e : manifest.tracks) {
    const auto obs = io::read_observations(fs::path(a.tracks_dir) / (e.id + ".obs.csv"), sc.obs_dims(), sc.obs_noise);
    const auto records = infer_one(sc, obs, a, e.id, options);
    auto f = open_out(out_dir / (e.id + ".posterior.csv"));
    io::write_posterior_log(f, records, sc.destination_ids);
  }
  out << "wrote " << manifest.tracks.size() << " posterior logs to " << out_dir.string() << '\n';
  return kOk;
}

// ---- evaluate

struct EvaluateArgs {
  std::string tracks_dir;
  std::string logs_dir;
  int bins = 50;
  std::string out;
};

int evaluate_cmd(const EvaluateArgs& a, std::ostream& out) {
  if (a.tracks_dir.empty()) throw UsageError("evaluate needs --tracks");
  if (a.bins < 1) throw UsageError("--bins must be positive");
  const auto manifest = io::load_manifest(fs::path(a.tracks_dir) / "manifest.json");
  const fs::path logs = a.logs_dir.empty() ? fs::path(a.tracks_dir) : fs::path(a.logs_dir);
  std::vector<evaluate::TrackSeries> series;
  for (const auto& e : manifest.tracks) {
    const auto log = io::read_posterior_log(logs / (e.id + ".posterior.csv"));
    evaluate::TrackSeries s;
    s.start = e.t0;
    s.arrival = e.T;
    for (const auto& r : log.records) s.times.push_back(r.t);
    s.success = evaluate::success_series(log.records, static_cast<int>(e.dest));
    series.push_back(std::move(s));
  }
  const auto curve = evaluate::progress_curve(series, a.bins);
  std::ostringstream table;
  table << "progress,success\n";
  for (std::size_t b = 0; b < curve.centres.size(); ++b) {
    table << format_number(curve.centres[b]) << ','
          << (curve.mean[b] ? format_number(*curve.mean[b]) : std::string("nan")) << '\n';
  }
  if (a.out.empty()) {
    out << table.str();
  } else {
    auto f = open_out(a.out);
    f << table.str();
  }
  out << "proportion_correct " << format_number(curve.mean_proportion) << " std "
      << format_number(curve.std_proportion) << " tracks " << series.size() << '\n';
  return kOk;
}

// ---- quadstudy

struct QuadArgs {
  Common common;
  std::string qs = "1,3,5,7,9,11,15";
  std::optional<int> tracks;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::string out;
};

int quadstudy_cmd(const QuadArgs& a, std::ostream& out) {
  const auto file = load(a.common);
  const auto qs = parse_int_list(a.qs);
  for (int q : qs) {
    if (q < 1 || (q > 1 && q % 2 == 0)) throw UsageError("q must be 1 or odd, got " + std::to_string(q));
  }
  const auto rows = evaluate::quadrature_study(file.scenario, qs, a.tracks.value_or(file.simulation.tracks),
                                               a.seed.value_or(file.simulation.seed),
                                               a.dt.value_or(file.simulation.dt), a.common.threads);
  std::ostringstream table;
  table << "q,mean,std,n\n";
  for (const auto& r : rows) {
    table << r.q << ',' << format_number(r.proportion.mean) << ',' << format_number(r.proportion.std) << ','
          << r.proportion.n << '\n';
  }
  if (a.out.empty()) {
    out << table.str();
  } else {
    auto f = open_out(a.out);
    f << table.str();
  }
  return kOk;
}

// ---- predict

struct PredictArgs {
  std::string snapshot;
  std::string times;
  std::string out;
};

int predict_cmd(const PredictArgs& a, std::ostream& out) {
  if (a.snapshot.empty() || a.times.empty()) throw UsageError("predict needs --snapshot and --t");
  const auto bank = io::load_snapshot(a.snapshot);
  const auto ts = parse_real_list(a.times);
  const auto& sc = bank.scenario();
  const int r = sc.model.state_dim();
  std::ostringstream table;
  table << "t_star,dest,dest_id,point,T,weight,arrived";
  for (int i = 1; i <= r; ++i) table << ",m" << i;
  for (int i = 1; i <= r; ++i) {
    for (int j = 1; j <= r; ++j) table << ",c" << i << '_' << j;
  }
  table << '\n';
  for (double t : ts) {
    const auto mix = bank.predict_future(t);
    for (const auto& c : mix.components) {
      table << format_number(t) << ',' << c.dest << ',' << sc.destination_ids[c.dest] << ',' << c.point << ','
            << format_number(bank.arrival_grid()[c.point]) << ',' << format_number(c.weight) << ','
            << (c.arrived ? 1 : 0);
      for (Eigen::Index i = 0; i < r; ++i) table << ',' << format_number(c.belief.mean(i));
      for (Eigen::Index i = 0; i < r; ++i) {
        for (Eigen::Index j = 0; j < r; ++j) table << ',' << format_number(c.belief.cov(i, j));
      }
      table << '\n';
    }
  }
  if (a.out.empty()) {
    out << table.str();
  } else {
    auto f = open_out(a.out);
    f << table.str();
  }
  return kOk;
}

// ---- fit

struct FitArgs {
  Common common;
  std::string tracks_dir;
  std::string param = "auto";
  std::string grid;  // lo:hi:step
  std::string out;
};

int fit_cmd(const FitArgs& a, std::ostream& out) {
  const auto file = load(a.common);
  const auto& sc = file.scenario;
  if (a.tracks_dir.empty()) throw UsageError("fit needs --tracks");
  const auto manifest = io::load_manifest(fs::path(a.tracks_dir) / "manifest.json");
  std::vector<fit::LabelledTrack> training;
  for (const auto& e : manifest.tracks) {
    training.push_back({io::read_observations(fs::path(a.tracks_dir) / (e.id + ".obs.csv"), sc.obs_dims(),
                                              sc.obs_noise),
                        e.dest, e.T});
  }

  std::string param = a.param;
  if (param == "auto") {
    switch (sc.model.kind) {
      case motion::ModelKind::MRD: param = "lambda"; break;
      case motion::ModelKind::ERV: param = "eta"; break;
      default: param = "sigma"; break;
    }
  }
  const double sigma0 = sc.model.noise(0, 0);
  double lo = 0.05, hi = 1.0, step = 0.05;
  if (param == "sigma") {
    lo = 0.5 * sigma0;
    hi = 2.0 * sigma0;
    step = 0.1 * sigma0;
  }
  if (!a.grid.empty()) {
    std::string g = a.grid;
    std::replace(g.begin(), g.end(), ':', ',');
    const auto v = parse_real_list(g);
    if (v.size() != 3) throw UsageError("--grid takes lo:hi:step");
    lo = v[0];
    hi = v[1];
    step = v[2];
  }
  fit::ParamGrid grid;
  const auto values = fit::linear_grid(lo, hi, step);
  if (param == "lambda") {
    if (sc.model.kind != motion::ModelKind::MRD) throw UsageError("lambda applies to MRD models");
    grid.reversion = values;
  } else if (param == "eta" || param == "rho") {
    if (sc.model.kind != motion::ModelKind::ERV) throw UsageError(param + " applies to ERV models");
    (param == "eta" ? grid.spring : grid.drag) = values;
  } else if (param == "sigma") {
    grid.noise = values;
  } else {
    throw UsageError("--param must be auto, lambda, eta, rho or sigma");
  }

  const auto result = fit::fit_params(sc, training, grid, a.common.threads);
  nlohmann::json fragment{{"model", io::model_to_json(result.params)},
                          {"log_likelihood", result.log_lik},
                          {"tracks", training.size()}};
  nlohmann::json table = nlohmann::json::array();
  for (const auto& g : result.table) {
    const double v = param == "lambda" ? g.params.reversion(0)
                     : param == "eta"  ? g.params.spring(0)
                     : param == "rho"  ? g.params.drag(0)
                                       : g.params.noise(0, 0);
    table.push_back({{param, v}, {"log_likelihood", g.log_lik}});
  }
  fragment["grid"] = table;
  if (a.out.empty()) {
    out << fragment.dump(2) << '\n';
  } else {
    io::write_json(a.out, fragment);
    out << "fitted " << param << " written to " << a.out << '\n';
  }
  return kOk;
}

// ---- serve

struct ServeArgs {
  std::uint16_t port = 8765;
  std::string address = "127.0.0.1";
  std::string scenario_dir;
  std::string demo;
  int q = 9;
  int threads = 1;
  int heartbeat_ms = 5000;
};

int serve_cmd(const ServeArgs& a, std::ostream& out) {
  server::Options o;
  o.address = a.address;
  o.port = a.port;
  o.session.scenario_dir = a.scenario_dir;
  o.session.default_q = a.q;
  o.session.threads = 1;
  o.io_threads = std::max(1, a.threads);
  o.demo_dir = a.demo;
  o.heartbeat = std::chrono::milliseconds(a.heartbeat_ms);
  o.handle_signals = true;
  server::Server srv(o);
  out << "listening on ws://" << a.address << ':' << srv.port() << std::endl;
  srv.run();
  return kOk;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--scenario", c.scenario, "Scenario file (JSON)");
  sub->add_option("--noise-std", c.noise_std, "Override the observation noise standard deviation");
  sub->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Destination and arrival-time inference with bridged filter banks", "bridgeintent"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Sample tracks and observations from a scenario");
  add_common(s, sim.common);
  s->add_option("--tracks", sim.tracks, "Number of tracks");
  s->add_option("--seed", sim.seed, "Random seed");
  s->add_option("--dt", sim.dt, "Sampling interval");
  s->add_option("--out", sim.out, "Output directory");

  FitArgs fa;
  auto* f = app.add_subcommand("fit", "Grid-search maximum likelihood for a model parameter");
  add_common(f, fa.common);
  f->add_option("--tracks", fa.tracks_dir, "Directory with manifest.json and track files");
  f->add_option("--param", fa.param, "auto, lambda, eta, rho or sigma");
  f->add_option("--grid", fa.grid, "lo:hi:step");
  f->add_option("--out", fa.out, "Write the fitted model fragment here");

  InferArgs ia;
  auto* i = app.add_subcommand("infer", "Per-observation posterior log for one track or a directory");
  add_common(i, ia.common);
  i->add_option("--track", ia.track, "Track id or observation file");
  i->add_option("--tracks", ia.tracks_dir, "Track directory");
  i->add_option("--q", ia.q, "Quadrature points (default from the scenario)");
  i->add_option("--method", ia.method, "bridge, nn, ba or mrd-nobridge");
  i->add_option("--out", ia.out, "Output file (single track) or directory");
  i->add_option("--snapshot-out", ia.snapshot_out, "Save the final bank");
  i->add_option("--nn-var", ia.nn_var, "Nearest-neighbour variance");
  i->add_option("--ba-var", ia.ba_var, "Bearing-angle variance (rad^2)");

  EvaluateArgs ea;
  auto* e = app.add_subcommand("evaluate", "Success-versus-progress curve from posterior logs");
  e->add_option("--tracks", ea.tracks_dir, "Track directory with manifest.json");
  e->add_option("--logs", ea.logs_dir, "Directory of <id>.posterior.csv (default: the track directory)");
  e->add_option("--bins", ea.bins, "Progress bins");
  e->add_option("--out", ea.out, "Curve output file");

  QuadArgs qa;
  auto* qs = app.add_subcommand("quadstudy", "Proportion correct against the number of quadrature points");
  add_common(qs, qa.common);
  qs->add_option("--q", qa.qs, "Comma-separated q values");
  qs->add_option("--tracks", qa.tracks, "Number of simulated tracks");
  qs->add_option("--seed", qa.seed, "Random seed");
  qs->add_option("--dt", qa.dt, "Sampling interval");
  qs->add_option("--out", qa.out, "Output file");

  PredictArgs pa;
  auto* p = app.add_subcommand("predict", "Future-state mixtures from a saved bank");
  p->add_option("--snapshot", pa.snapshot, "Bank snapshot from infer --snapshot-out");
  p->add_option("--t", pa.times, "Comma-separated prediction times");
  p->add_option("--out", pa.out, "Output file");

  ServeArgs sa;
  auto* sv = app.add_subcommand("serve", "WebSocket session service");
  sv->add_option("--port", sa.port, "TCP port (0 picks one)");
  sv->add_option("--address", sa.address, "Bind address");
  sv->add_option("--scenario-dir", sa.scenario_dir, "Directory of named scenarios");
  sv->add_option("--demo", sa.demo, "Static files for the browser demo");
  sv->add_option("--q", sa.q, "Default quadrature points");
  sv->add_option("--threads", sa.threads, "I/O threads")->check(CLI::PositiveNumber);
  sv->add_option("--heartbeat", sa.heartbeat_ms, "WebSocket ping interval in ms")->check(CLI::PositiveNumber);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (s->parsed()) return simulate_cmd(sim, out);
    if (f->parsed()) return fit_cmd(fa, out);
    if (i->parsed()) return infer_cmd(ia, out);
    if (e->parsed()) return evaluate_cmd(ea, out);
    if (qs->parsed()) return quadstudy_cmd(qa, out);
    if (p->parsed()) return predict_cmd(pa, out);
    if (sv->parsed()) return serve_cmd(sa, out);
  } catch (const UsageError& ex) {
    err << "error: " << ex.what() << '\n';
    return kUsage;
  } catch (const TrackError& ex) {
    err << "error: " << ex.what() << '\n';
    return ex.exit_code;
  } catch (const intent::ArrivalWindowExceeded& ex) {
    err << "error: " << ex.what() << '\n';
    return kDataError;
  } catch (const InvalidInput& ex) {
    err << "error: " << ex.what() << '\n';
    return kDataError;
  } catch (const NumericalError& ex) {
    err << "error: numerical failure: " << ex.what() << '\n';
    return kNumerical;
  } catch (const std::filesystem::filesystem_error& ex) {
    err << "error: " << ex.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace bridgeintent::cli

#include "bridgeintent/scenario_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace bridgeintent::io {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) { throw DataError(where + ": " + what); }

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) fail(where, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) fail(where + "." + key, "missing field");
  return *it;
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

Vector vector_of(const json& j, const std::string& where, Eigen::Index expected = -1) {
  if (j.is_number() && expected > 0) return Vector::Constant(expected, j.get<double>());
  if (!j.is_array()) fail(where, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], where + "[" + std::to_string(i) + "]");
  if (expected >= 0 && v.size() != expected) {
    fail(where, "expected " + std::to_string(expected) + " entries, got " + std::to_string(v.size()));
  }
  return v;
}

Matrix matrix_of(const json& j, const std::string& where, Eigen::Index n) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) {
    fail(where, "expected a " + std::to_string(n) + " x " + std::to_string(n) + " array of rows");
  }
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m.row(i) = vector_of(j[static_cast<std::size_t>(i)], where + "[" + std::to_string(i) + "]", n).transpose();
  }
  return m;
}

/// Covariance from "cov" (matrix), "cov_diag" (vector) or "std" (scalar or
/// vector of standard deviations); `fallback` if none is present.
std::optional<Matrix> covariance_of(const json& obj, const std::string& where, Eigen::Index n) {
  if (obj.contains("cov")) return matrix_of(obj["cov"], where + ".cov", n);
  if (obj.contains("cov_diag")) return Matrix(vector_of(obj["cov_diag"], where + ".cov_diag", n).asDiagonal());
  if (obj.contains("std")) {
    const Vector s = vector_of(obj["std"], where + ".std", n);
    return Matrix(s.array().square().matrix().asDiagonal());
  }
  return std::nullopt;
}

quadrature::ArrivalPrior parse_arrival(const json& j, const std::string& where) {
  const auto type = field(j, "type", where);
  if (!type.is_string()) fail(where + ".type", "expected a string");
  const auto t = type.get<std::string>();
  try {
    if (t == "uniform") {
      return quadrature::ArrivalPrior::uniform(number(field(j, "lower", where), where + ".lower"),
                                               number(field(j, "upper", where), where + ".upper"));
    }
    if (t == "histogram") {
      const Vector times = vector_of(field(j, "times", where), where + ".times");
      const Vector dens = vector_of(field(j, "density", where), where + ".density");
      return quadrature::ArrivalPrior::tabulated(std::vector<double>(times.begin(), times.end()),
                                                 std::vector<double>(dens.begin(), dens.end()));
    }
  } catch (const DataError&) {
    throw;
  } catch (const InvalidInput& e) {
    fail(where, e.what());
  }
  fail(where + ".type", "expected \"uniform\" or \"histogram\", got \"" + t + "\"");
}

json arrival_to_json(const quadrature::ArrivalPrior& p) {
  if (p.is_uniform()) return {{"type", "uniform"}, {"lower", p.lower()}, {"upper", p.upper()}};
  return {{"type", "histogram"}, {"times", p.knots()}, {"density", p.knot_density()}};
}

json vector_json(const Vector& v) { return std::vector<double>(v.begin(), v.end()); }

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
  return rows;
}

}  // namespace

motion::ModelParams parse_model(const json& j, const std::string& where) {
  const auto& kind_j = field(j, "kind", where);
  if (!kind_j.is_string()) fail(where + ".kind", "expected a string");
  motion::ModelParams p;
  try {
    p.kind = motion::parse_model_kind(kind_j.get<std::string>());
  } catch (const InvalidInput& e) {
    fail(where + ".kind", e.what());
  }
  const auto& dims = field(j, "spatial_dims", where);
  if (!dims.is_number_integer() || dims.get<int>() < 1) fail(where + ".spatial_dims", "expected a positive integer");
  const int s = dims.get<int>();
  p.spatial_dims = s;
  auto diag = [&](const char* key, Vector& out, bool needed) {
    if (j.contains(key)) {
      out = vector_of(j[key], where + "." + key, s);
    } else if (needed) {
      fail(where + "." + key, "missing field");
    }
  };
  using motion::ModelKind;
  diag("lambda", p.reversion, p.kind == ModelKind::MRD);
  diag("eta", p.spring, p.kind == ModelKind::ERV);
  diag("rho", p.drag, p.kind == ModelKind::ERV);
  if (j.contains("sigma_matrix")) {
    p.noise = matrix_of(j["sigma_matrix"], where + ".sigma_matrix", s);
  } else {
    p.noise = Matrix(vector_of(field(j, "sigma", where), where + ".sigma", s).asDiagonal());
  }
  try {
    p.validate();
  } catch (const InvalidInput& e) {
    fail(where, e.what());
  }
  return p;
}

json model_to_json(const motion::ModelParams& p) {
  json j{{"kind", std::string(motion::to_string(p.kind))}, {"spatial_dims", p.spatial_dims}};
  const Matrix diag = Matrix(p.noise.diagonal().asDiagonal());
  if (p.noise == diag) {
    j["sigma"] = vector_json(p.noise.diagonal());
  } else {
    j["sigma_matrix"] = matrix_json(p.noise);
  }
  if (p.reversion.size()) j["lambda"] = vector_json(p.reversion);
  if (p.spring.size()) j["eta"] = vector_json(p.spring);
  if (p.drag.size()) j["rho"] = vector_json(p.drag);
  return j;
}

ScenarioFile parse_scenario(const json& doc, const std::string& source) {
  ScenarioFile out;
  auto& sc = out.scenario;
  if (!doc.is_object()) fail(source, "expected a JSON object");
  sc.name = doc.value("name", std::string("scenario"));
  sc.model = parse_model(field(doc, "model", source), source + ".model");
  const int s = sc.model.spatial_dims;
  const int r = sc.model.state_dim();

  const auto& dests = field(doc, "destinations", source);
  if (!dests.is_array() || dests.empty()) fail(source + ".destinations", "expected a non-empty array");
  bool any_prior = false;
  bool all_prior = true;
  std::vector<std::optional<quadrature::ArrivalPrior>> overrides;
  for (std::size_t d = 0; d < dests.size(); ++d) {
    const std::string where = source + ".destinations[" + std::to_string(d) + "]";
    const auto& dj = dests[d];
    motion::Destination dest;
    if (dj.contains("mean")) {
      dest.mean = vector_of(dj["mean"], where + ".mean", r);
    } else {
      dest.mean = Vector::Zero(r);
      dest.mean.head(s) = vector_of(field(dj, "position", where), where + ".position", s);
      if (dj.contains("velocity")) {
        if (r == s) fail(where + ".velocity", "this model has no velocity state");
        dest.mean.tail(s) = vector_of(dj["velocity"], where + ".velocity", s);
      }
    }
    dest.cov = covariance_of(dj, where, r).value_or(Matrix::Zero(r, r));
    if (dj.contains("prior")) {
      dest.prior_mass = number(dj["prior"], where + ".prior");
      any_prior = true;
    } else {
      all_prior = false;
    }
    std::string id = "D" + std::to_string(d + 1);
    if (dj.contains("id")) {
      if (!dj["id"].is_string()) fail(where + ".id", "expected a string");
      id = dj["id"].get<std::string>();
    }
    sc.destination_ids.push_back(id);
    sc.destinations.push_back(dest);
    overrides.push_back(dj.contains("arrival_prior")
                            ? std::optional(parse_arrival(dj["arrival_prior"], where + ".arrival_prior"))
                            : std::nullopt);
  }
  if (any_prior && !all_prior) fail(source + ".destinations", "give a prior for every destination or for none");
  if (!any_prior) {
    for (auto& d : sc.destinations) d.prior_mass = 1.0 / static_cast<double>(sc.destinations.size());
  }

  std::optional<quadrature::ArrivalPrior> shared;
  if (doc.contains("arrival_prior")) shared = parse_arrival(doc["arrival_prior"], source + ".arrival_prior");
  const bool any_override = std::any_of(overrides.begin(), overrides.end(), [](const auto& o) { return o.has_value(); });
  if (!any_override) {
    if (!shared) fail(source + ".arrival_prior", "missing field");
    sc.arrival_priors = {*shared};
  } else {
    for (std::size_t d = 0; d < overrides.size(); ++d) {
      if (!overrides[d] && !shared) {
        fail(source + ".destinations[" + std::to_string(d) + "].arrival_prior", "missing, and no shared prior");
      }
      sc.arrival_priors.push_back(overrides[d] ? *overrides[d] : *shared);
    }
  }

  const auto& noise = field(doc, "observation_noise", source);
  const auto V = covariance_of(noise, source + ".observation_noise", s);
  if (!V) fail(source + ".observation_noise", "expected std, cov_diag or cov");
  sc.obs_noise = *V;

  const auto& init = field(doc, "initial_prior", source);
  sc.initial.mean = init.contains("mean") ? vector_of(init["mean"], source + ".initial_prior.mean", r) : Vector::Zero(r);
  if (!init.contains("mean") && init.contains("position")) {
    sc.initial.mean.head(s) = vector_of(init["position"], source + ".initial_prior.position", s);
    if (init.contains("velocity")) sc.initial.mean.tail(s) = vector_of(init["velocity"], source + ".initial_prior.velocity", s);
  }
  if (init.contains("position_std") || init.contains("velocity_std")) {
    Vector sd = Vector::Zero(r);
    if (init.contains("position_std")) sd.head(s) = vector_of(init["position_std"], source + ".initial_prior.position_std", s);
    if (init.contains("velocity_std")) {
      if (r == s) fail(source + ".initial_prior.velocity_std", "this model has no velocity state");
      sd.tail(s) = vector_of(init["velocity_std"], source + ".initial_prior.velocity_std", s);
    }
    sc.initial.cov = sd.array().square().matrix().asDiagonal();
  } else {
    const auto cov = covariance_of(init, source + ".initial_prior", r);
    if (!cov) fail(source + ".initial_prior", "expected cov, cov_diag, std or position_std");
    sc.initial.cov = *cov;
  }

  if (doc.contains("simulation")) {
    const auto& sim = doc["simulation"];
    const std::string where = source + ".simulation";
    if (sim.contains("dt")) out.simulation.dt = number(sim["dt"], where + ".dt");
    if (sim.contains("tracks")) out.simulation.tracks = static_cast<int>(number(sim["tracks"], where + ".tracks"));
    if (sim.contains("seed")) out.simulation.seed = static_cast<std::uint64_t>(number(sim["seed"], where + ".seed"));
    if (sim.contains("q")) out.simulation.q = static_cast<int>(number(sim["q"], where + ".q"));
  }

  try {
    sc.validate();
  } catch (const InvalidInput& e) {
    fail(source, e.what());
  }
  return out;
}

ScenarioFile load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string() + ": cannot open scenario file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return parse_scenario(doc, path.filename().string());
}

json scenario_to_json(const intent::Scenario& sc, const std::optional<SimulationDefaults>& simulation) {
  json doc;
  doc["name"] = sc.name;
  doc["model"] = model_to_json(sc.model);
  json dests = json::array();
  for (std::size_t d = 0; d < sc.size(); ++d) {
    json dj;
    dj["id"] = d < sc.destination_ids.size() ? sc.destination_ids[d] : "D" + std::to_string(d + 1);
    dj["mean"] = vector_json(sc.destinations[d].mean);
    dj["cov"] = matrix_json(sc.destinations[d].cov);
    dj["prior"] = sc.destinations[d].prior_mass;
    if (sc.arrival_priors.size() > 1) dj["arrival_prior"] = arrival_to_json(sc.arrival_priors[d]);
    dests.push_back(dj);
  }
  doc["destinations"] = dests;
  if (sc.arrival_priors.size() == 1) doc["arrival_prior"] = arrival_to_json(sc.arrival_priors.front());
  doc["observation_noise"] = {{"cov", matrix_json(sc.obs_noise)}};
  doc["initial_prior"] = {{"mean", vector_json(sc.initial.mean)}, {"cov", matrix_json(sc.initial.cov)}};
  if (simulation) {
    doc["simulation"] = {{"dt", simulation->dt}, {"tracks", simulation->tracks}, {"seed", simulation->seed},
                         {"q", simulation->q}};
  }
  return doc;
}

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw DataError(path.string() + ": cannot write file");
  out << doc.dump(2) << '\n';
}

}  // namespace bridgeintent::io

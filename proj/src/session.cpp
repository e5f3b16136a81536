#include "bridgeintent/session.hpp"

#include "bridgeintent/format.hpp"
#include "bridgeintent/scenario_io.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

namespace bridgeintent::session {

using nlohmann::json;

namespace {

/// Client-side mistake; reported with `code`.
struct RequestError {
  std::string code;
  std::string message;
};

[[noreturn]] void bad(const std::string& message) { throw RequestError{"bad_message", message}; }

json rounded(double x) { return std::isfinite(x) ? json(round_number(x)) : json(nullptr); }

json rounded(std::span<const double> xs) {
  json out = json::array();
  for (double x : xs) out.push_back(rounded(x));
  return out;
}

json rounded(const Vector& v) { return rounded(std::span<const double>(v.data(), static_cast<std::size_t>(v.size()))); }

json rounded(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(rounded(Vector(m.row(i).transpose())));
  return rows;
}

double number(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number()) bad(std::string("field \"") + key + "\" must be a number");
  const double v = it->get<double>();
  if (!std::isfinite(v)) bad(std::string("field \"") + key + "\" must be finite");
  return v;
}

Vector numbers(const json& j, const std::string& what, Eigen::Index n) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) {
    bad(what + " must be an array of " + std::to_string(n) + " numbers");
  }
  Vector v(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& e = j[static_cast<std::size_t>(k)];
    if (!e.is_number()) bad(what + " must contain only numbers");
    v(k) = e.get<double>();
    if (!std::isfinite(v(k))) bad(what + " must be finite");
  }
  return v;
}

PointingDefaults defaults_from(const json& req) {
  PointingDefaults p;
  if (!req.contains("pointing")) return p;
  const auto& j = req["pointing"];
  if (!j.is_object()) bad("\"pointing\" must be an object");
  if (j.contains("sigma")) p.sigma = number(j, "sigma");
  if (j.contains("obs_std")) p.obs_std = number(j, "obs_std");
  if (j.contains("start_std")) p.start_std = number(j, "start_std");
  if (j.contains("velocity_std")) p.velocity_std = number(j, "velocity_std");
  if (j.contains("arrival_lower")) p.arrival_lower = number(j, "arrival_lower");
  if (j.contains("arrival_upper")) p.arrival_upper = number(j, "arrival_upper");
  return p;
}

}  // namespace

intent::Scenario pointing_scenario(const std::vector<Vector>& positions, const std::vector<std::string>& ids,
                                   const Vector& start, const PointingDefaults& p) {
  require(!positions.empty() && positions.size() == ids.size(), "pointing scenario: need one id per position");
  intent::Scenario sc;
  sc.name = "pointing";
  sc.model = motion::ModelParams::constant_velocity(2, p.sigma);
  const double mass = 1.0 / static_cast<double>(positions.size());
  for (std::size_t d = 0; d < positions.size(); ++d) {
    require(positions[d].size() == 2, "pointing scenario: positions are 2D");
    Vector mean = Vector::Zero(4);
    mean.head(2) = positions[d];
    // the pointer stops on the icon; position pinned, velocity near zero
    Matrix cov = Matrix::Zero(4, 4);
    cov.bottomRightCorner(2, 2) = Matrix::Identity(2, 2);
    sc.destinations.push_back({mean, cov, mass});
    sc.destination_ids.push_back(ids[d]);
  }
  sc.arrival_priors = {quadrature::ArrivalPrior::uniform(p.arrival_lower, p.arrival_upper)};
  sc.obs_noise = p.obs_std * p.obs_std * Matrix::Identity(2, 2);
  sc.initial.mean = Vector::Zero(4);
  sc.initial.mean.head(2) = start;
  Vector var(4);
  var << p.start_std * p.start_std, p.start_std * p.start_std, p.velocity_std * p.velocity_std,
      p.velocity_std * p.velocity_std;
  sc.initial.cov = var.asDiagonal();
  sc.validate();
  return sc;
}

intent::Scenario circle_layout(int n, double spacing, const PointingDefaults& defaults) {
  require(n >= 1, "circle layout: need at least one icon");
  require(spacing > 0.0, "circle layout: spacing must be positive");
  // chord between neighbours equals `spacing`
  const double radius = n == 1 ? spacing : spacing / (2.0 * std::sin(std::numbers::pi / n));
  std::vector<Vector> positions;
  std::vector<std::string> ids;
  for (int k = 0; k < n; ++k) {
    const double a = 2.0 * std::numbers::pi * k / n;
    positions.push_back(Vector{{radius * std::cos(a), radius * std::sin(a)}});
    ids.push_back("icon" + std::to_string(k + 1));
  }
  return pointing_scenario(positions, ids, Vector::Zero(2), defaults);
}

struct Session::State {
  Config config;
  std::optional<intent::Scenario> scenario;
  intent::BankOptions options;
  std::optional<intent::FilterBank> bank;
  Matrix A;  // screen -> model
  Vector b;
  bool window_exceeded = false;

  intent::Scenario load_start_scenario(const json& req) {
    if (req.contains("scenario")) {
      const auto& s = req["scenario"];
      if (s.is_object()) {
        try {
          return io::parse_scenario(s, "scenario").scenario;
        } catch (const InvalidInput& e) {
          bad(e.what());
        }
      }
      if (!s.is_string()) bad("\"scenario\" must be a name or a scenario object");
      const auto name = s.get<std::string>();
      const bool plain = !name.empty() && name.find_first_of("/\\") == std::string::npos && name != "." && name != "..";
      if (!plain) bad("scenario names may not contain path separators");
      if (config.scenario_dir.empty()) bad("this server has no scenario directory");
      const auto path = config.scenario_dir / (name + ".json");
      if (!std::filesystem::exists(path)) bad("unknown scenario \"" + name + "\"");
      try {
        return io::load_scenario(path).scenario;
      } catch (const InvalidInput& e) {
        bad(e.what());
      }
    }
    const auto p = defaults_from(req);
    if (req.contains("layout")) {
      const auto& l = req["layout"];
      if (!l.is_object()) bad("\"layout\" must be an object");
      const auto kind = l.value("kind", std::string("circle"));
      if (kind != "circle") bad("unknown layout kind \"" + kind + "\"");
      const auto it = l.find("n");
      if (it == l.end() || !it->is_number_integer() || it->get<int>() < 1) bad("layout.n must be a positive integer");
      const double spacing = l.contains("spacing") ? number(l, "spacing") : 2.0;
      if (spacing <= 0.0) bad("layout.spacing must be positive");
      return circle_layout(it->get<int>(), spacing, p);
    }
    if (req.contains("destinations")) {
      const auto& list = req["destinations"];
      if (!list.is_array() || list.empty()) bad("\"destinations\" must be a non-empty array");
      std::vector<Vector> positions;
      std::vector<std::string> ids;
      for (std::size_t d = 0; d < list.size(); ++d) {
        const auto& e = list[d];
        if (e.is_array()) {
          positions.push_back(numbers(e, "destinations[" + std::to_string(d) + "]", 2));
          ids.push_back("D" + std::to_string(d + 1));
        } else if (e.is_object() && e.contains("position")) {
          positions.push_back(numbers(e["position"], "destinations[" + std::to_string(d) + "].position", 2));
          ids.push_back(e.contains("id") && e["id"].is_string() ? e["id"].get<std::string>()
                                                               : "D" + std::to_string(d + 1));
        } else {
          bad("destinations[" + std::to_string(d) + "] must be [x, y] or {id, position}");
        }
      }
      const Vector start = req.contains("start") ? numbers(req["start"], "start", 2) : Vector::Zero(2);
      return pointing_scenario(positions, ids, start, p);
    }
    bad("start needs one of \"scenario\", \"layout\" or \"destinations\"");
  }

  json start(const json& req) {
    auto sc = load_start_scenario(req);
    intent::BankOptions opts;
    opts.q = config.default_q;
    opts.threads = config.threads;
    if (req.contains("q")) {
      const auto& q = req["q"];
      if (!q.is_number_integer() || q.get<int>() < 1 || (q.get<int>() > 1 && q.get<int>() % 2 == 0)) {
        bad("q must be 1 or an odd integer >= 3");
      }
      opts.q = q.get<int>();
    }
    const auto s = static_cast<Eigen::Index>(sc.obs_dims());
    Matrix A = Matrix::Identity(s, s);
    Vector b = Vector::Zero(s);
    if (req.contains("transform")) {
      const auto& tr = req["transform"];
      if (!tr.is_object()) bad("\"transform\" must be an object");
      if (tr.contains("A")) {
        const auto& rows = tr["A"];
        if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != s) bad("transform.A has the wrong shape");
        for (Eigen::Index i = 0; i < s; ++i) {
          A.row(i) = numbers(rows[static_cast<std::size_t>(i)], "transform.A row", s).transpose();
        }
      }
      if (tr.contains("b")) b = numbers(tr["b"], "transform.b", s);
    }
    try {
      bank.emplace(sc, opts);
    } catch (const InvalidInput& e) {
      bad(e.what());
    }
    scenario = std::move(sc);
    options = opts;
    this->A = A;
    this->b = b;
    window_exceeded = false;
    return ack("start");
  }

  json ack(const char* of) const {
    json reply{{"type", "ack"}, {"of", of}};
    reply["destinations"] = scenario->destination_ids;
    reply["q"] = bank->q();
    reply["T_grid"] = rounded(bank->arrival_grid());
    return reply;
  }

  void need_started() const {
    if (!bank) throw RequestError{"not_started", "send start first"};
  }

  json observe(const json& req) {
    need_started();
    const double t = number(req, "t");
    if (!req.contains("y")) bad("observe needs \"y\"");
    const Vector y = A * numbers(req["y"], "y", static_cast<Eigen::Index>(A.cols())) + b;
    if (bank->observations() > 0 && !(t > bank->t_now())) {
      throw RequestError{"time_regression", "t = " + format_number(t) + " does not advance past " +
                                                 format_number(bank->t_now())};
    }
    intent::Posteriors post;
    try {
      post = bank->update(t, y);
    } catch (const intent::ArrivalWindowExceeded& e) {
      window_exceeded = true;
      throw RequestError{"window_exceeded", e.what()};
    }
    json reply{{"type", "posterior"}, {"n", post.n}, {"t", rounded(post.t)}};
    reply["dest_probs"] = rounded(post.dest_probs);
    reply["map"] = post.map;
    reply["map_id"] = scenario->destination_ids[static_cast<std::size_t>(post.map)];
    reply["arrival"] = {{"T_grid", rounded(bank->arrival_grid())}, {"v", rounded(post.arrival)}};
    return reply;
  }

  json reset() {
    need_started();
    bank.emplace(*scenario, options);
    window_exceeded = false;
    return ack("reset");
  }

  json predict(const json& req) {
    need_started();
    const double t_star = number(req, "t_star");
    intent::GaussianMixture mix;
    try {
      mix = bank->predict_future(t_star);
    } catch (const InvalidInput& e) {
      bad(e.what());
    }
    const auto s = static_cast<Eigen::Index>(scenario->obs_dims());
    const auto pos = mix.head(s);
    json groups = json::array();
    const auto by_dest = pos.by_destination(scenario->size());
    for (std::size_t d = 0; d < by_dest.size(); ++d) {
      const auto& [w, g] = by_dest[d];
      if (w <= 0.0) continue;
      groups.push_back({{"dest", d}, {"id", scenario->destination_ids[d]}, {"weight", rounded(w)},
                        {"mean", rounded(g.mean)}, {"cov", rounded(g.cov)}});
    }
    return {{"type", "prediction"},
            {"t_star", rounded(t_star)},
            {"components", mix.components.size()},
            {"mean", rounded(pos.mean())},
            {"cov", rounded(pos.covariance())},
            {"by_destination", groups}};
  }
};

Session::Session(Config config) : state_(std::make_unique<State>()) { state_->config = std::move(config); }
Session::~Session() = default;
Session::Session(Session&&) noexcept = default;
Session& Session::operator=(Session&&) noexcept = default;

bool Session::started() const { return state_->bank.has_value(); }
const intent::FilterBank* Session::bank() const { return state_->bank ? &*state_->bank : nullptr; }

json Session::handle(const json& request) {
  const auto received = std::chrono::steady_clock::now();
  json reply;
  try {
    if (!request.is_object()) bad("message must be a JSON object");
    if (request.contains("v") && request["v"] != kProtocolVersion) {
      bad("unsupported protocol version " + request["v"].dump());
    }
    const auto it = request.find("type");
    if (it == request.end() || !it->is_string()) bad("message needs a string \"type\"");
    const auto type = it->get<std::string>();
    if (type == "start") {
      reply = state_->start(request);
    } else if (type == "observe") {
      reply = state_->observe(request);
    } else if (type == "reset") {
      reply = state_->reset();
    } else if (type == "predict") {
      reply = state_->predict(request);
    } else if (type == "ping") {
      reply = {{"type", "pong"}};
    } else {
      bad("unknown message type \"" + type + "\"");
    }
  } catch (const RequestError& e) {
    reply = {{"type", "error"}, {"code", e.code}, {"message", e.message}};
  } catch (const NumericalError& e) {
    reply = {{"type", "error"}, {"code", "numerical"}, {"message", e.what()}};
  }
  reply["v"] = kProtocolVersion;
  if (request.is_object() && request.contains("id")) reply["id"] = request["id"];
  if (reply["type"] == "posterior") {
    const auto elapsed = std::chrono::steady_clock::now() - received;
    reply["latency_us"] = std::chrono::duration_cast<std::chrono::microseconds>(elapsed).count();
  }
  return reply;
}

std::string Session::handle_text(std::string_view text) {
  json request;
  try {
    request = json::parse(text);
  } catch (const json::parse_error& e) {
    return json{{"v", kProtocolVersion}, {"type", "error"}, {"code", "bad_message"}, {"message", e.what()}}.dump();
  }
  return handle(request).dump();
}

}  // namespace bridgeintent::session

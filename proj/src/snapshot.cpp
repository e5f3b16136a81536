#include "bridgeintent/snapshot.hpp"

#include "bridgeintent/scenario_io.hpp"

#include <cmath>
#include <fstream>

namespace bridgeintent::io {

using nlohmann::json;

namespace {

// -inf (an inactive cell, or a bank with no observations yet) has no JSON
// literal; it is stored as null.
json real(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
double real_from(const json& j) { return j.is_null() ? kNegInf : j.get<double>(); }

json flat(const Matrix& m) { return std::vector<double>(m.data(), m.data() + m.size()); }

}  // namespace

json snapshot_to_json(const intent::FilterBank& bank) {
  json cells = json::array();
  for (const auto& c : bank.cells()) {
    cells.push_back({{"mean", flat(c.mean)}, {"cov", flat(c.cov)}, {"log_lik", real(c.log_lik)}, {"n", c.n},
                     {"t_last", real(c.t_last)}, {"active", c.active}});
  }
  return {{"v", 1},
          {"scenario", scenario_to_json(bank.scenario())},
          {"arrival_grid", bank.arrival_grid()},
          {"t_now", real(bank.t_now())},
          {"n", bank.observations()},
          {"cells", cells}};
}

intent::FilterBank snapshot_from_json(const json& doc, const std::string& source) {
  try {
    auto scenario = parse_scenario(doc.at("scenario"), source + ".scenario").scenario;
    intent::BankOptions options;
    options.arrival_grid = doc.at("arrival_grid").get<std::vector<double>>();
    const auto r = static_cast<Eigen::Index>(2 * scenario.model.state_dim());
    std::vector<kalman::FilterState> cells;
    for (const auto& c : doc.at("cells")) {
      kalman::FilterState s;
      const auto mean = c.at("mean").get<std::vector<double>>();
      const auto cov = c.at("cov").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(mean.size()) != r || static_cast<Eigen::Index>(cov.size()) != r * r) {
        throw DataError(source + ".cells: state dimension does not match the scenario");
      }
      s.mean = Eigen::Map<const Vector>(mean.data(), r);
      s.cov = Eigen::Map<const Matrix>(cov.data(), r, r);
      s.log_lik = real_from(c.at("log_lik"));
      s.n = c.at("n").get<int>();
      s.t_last = c.at("t_last").is_null() ? std::numeric_limits<double>::quiet_NaN() : c.at("t_last").get<double>();
      s.active = c.at("active").get<bool>();
      cells.push_back(std::move(s));
    }
    return intent::FilterBank::restore(std::move(scenario), std::move(options), std::move(cells),
                                       real_from(doc.at("t_now")), doc.at("n").get<int>());
  } catch (const json::exception& e) {
    throw DataError(source + ": " + e.what());
  } catch (const DataError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw DataError(source + ": " + e.what());
  }
}

void save_snapshot(const std::filesystem::path& path, const intent::FilterBank& bank) {
  std::ofstream out(path);
  if (!out) throw DataError(path.string() + ": cannot write snapshot");
  out << snapshot_to_json(bank).dump() << '\n';
}

intent::FilterBank load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string() + ": cannot open snapshot");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return snapshot_from_json(doc, path.string());
}

}  // namespace bridgeintent::io

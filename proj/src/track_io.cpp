#include "bridgeintent/track_io.hpp"

#include "bridgeintent/format.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace bridgeintent::io {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_cell(const std::string& cell, const std::string& where) {
  if (cell == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (cell == "inf") return std::numeric_limits<double>::infinity();
  if (cell == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (cell.empty() || ec != std::errc() || ptr != end) throw DataError(where + ": not a number: \"" + cell + "\"");
  return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError(path.string() + ": cannot write file");
  return out;
}

void write_row(std::ostream& out, double t, const Vector& v) {
  out << format_number(t);
  for (Eigen::Index k = 0; k < v.size(); ++k) out << ',' << format_number(v(k));
  out << '\n';
}

void header(std::ostream& out, char prefix, Eigen::Index k) {
  out << 't';
  for (Eigen::Index i = 1; i <= k; ++i) out << ',' << prefix << i;
  out << '\n';
}

}  // namespace

Table read_table(std::istream& in, const std::string& source) {
  Table table;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty() || line[0] == '#') continue;
    auto cells = split(line);
    if (table.header.empty()) {
      table.header = std::move(cells);
      continue;
    }
    const std::string where = source + ":" + std::to_string(lineno);
    if (cells.size() != table.header.size()) {
      throw DataError(where + ": expected " + std::to_string(table.header.size()) + " columns, got " +
                      std::to_string(cells.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) row[c] = parse_cell(cells[c], where + " column " + table.header[c]);
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw DataError(source + ": empty file");
  return table;
}

Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string() + ": cannot open file");
  return read_table(in, path.string());
}

void write_observations(std::ostream& out, const simulate::ObservationSet& obs) {
  header(out, 'y', obs.ys.empty() ? obs.noise.rows() : obs.ys.front().size());
  for (std::size_t n = 0; n < obs.size(); ++n) write_row(out, obs.times[n], obs.ys[n]);
}

void write_truth(std::ostream& out, const simulate::Track& track) {
  header(out, 'x', track.states.empty() ? 0 : track.states.front().size());
  for (std::size_t n = 0; n < track.times.size(); ++n) write_row(out, track.times[n], track.states[n]);
}

simulate::ObservationSet read_observations(const std::filesystem::path& path, int obs_dims, const Matrix& noise) {
  const auto table = read_table(path);
  const auto source = path.string();
  if (table.header.size() != static_cast<std::size_t>(obs_dims) + 1 || table.header[0] != "t") {
    throw DataError(source + ":1: expected header t,y1..y" + std::to_string(obs_dims));
  }
  simulate::ObservationSet obs;
  obs.noise = noise;
  int lineno = 1;
  for (const auto& row : table.rows) {
    ++lineno;
    for (double v : row) {
      if (!std::isfinite(v)) throw DataError(source + ": row " + std::to_string(lineno - 1) + ": non-finite value");
    }
    if (!obs.times.empty() && !(row[0] > obs.times.back())) {
      throw DataError(source + ": row " + std::to_string(lineno - 1) + ": time " + format_number(row[0]) +
                      " does not increase");
    }
    obs.times.push_back(row[0]);
    obs.ys.push_back(Eigen::Map<const Vector>(row.data() + 1, obs_dims));
  }
  return obs;
}

simulate::Track read_truth(const std::filesystem::path& path, int state_dims) {
  const auto table = read_table(path);
  if (table.header.size() != static_cast<std::size_t>(state_dims) + 1) {
    throw DataError(path.string() + ":1: expected header t,x1..x" + std::to_string(state_dims));
  }
  simulate::Track track;
  track.id = path.stem().stem().string();
  for (const auto& row : table.rows) {
    track.times.push_back(row[0]);
    track.states.push_back(Eigen::Map<const Vector>(row.data() + 1, state_dims));
  }
  if (track.times.empty()) throw DataError(path.string() + ": no rows");
  track.true_T = track.times.back();
  return track;
}

json manifest_to_json(const Manifest& m) {
  json tracks = json::array();
  for (const auto& e : m.tracks) {
    tracks.push_back({{"id", e.id}, {"index", e.index}, {"dest", e.dest}, {"dest_id", e.dest_id}, {"T", e.T},
                      {"t0", e.t0}});
  }
  return {{"scenario", m.scenario}, {"seed", m.seed}, {"dt", m.dt}, {"tracks", tracks}};
}

Manifest parse_manifest(const json& doc, const std::string& source) {
  Manifest m;
  try {
    m.scenario = doc.at("scenario").get<std::string>();
    m.seed = doc.at("seed").get<std::uint64_t>();
    m.dt = doc.at("dt").get<double>();
    const auto& tracks = doc.at("tracks");
    for (std::size_t j = 0; j < tracks.size(); ++j) {
      const auto& t = tracks[j];
      ManifestEntry e;
      e.id = t.at("id").get<std::string>();
      e.index = t.at("index").get<std::size_t>();
      e.dest = t.at("dest").get<std::size_t>();
      e.dest_id = t.value("dest_id", std::string());
      e.T = t.at("T").get<double>();
      e.t0 = t.value("t0", 0.0);
      m.tracks.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw DataError(source + ": " + e.what());
  }
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string() + ": cannot open manifest");
  try {
    return parse_manifest(json::parse(in), path.string());
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

Manifest write_tracks(const std::filesystem::path& dir, const intent::Scenario& scenario,
                      std::span<const simulate::SimulatedTrack> tracks, const std::string& scenario_path,
                      std::uint64_t seed, double dt) {
  std::filesystem::create_directories(dir);
  Manifest m{scenario_path, seed, dt, {}};
  for (std::size_t j = 0; j < tracks.size(); ++j) {
    const auto& tr = tracks[j].track;
    auto obs = open_out(dir / (tr.id + ".obs.csv"));
    write_observations(obs, tracks[j].obs);
    auto truth = open_out(dir / (tr.id + ".truth.csv"));
    write_truth(truth, tr);
    m.tracks.push_back({tr.id, j, tr.true_dest, scenario.destination_ids.at(tr.true_dest), tr.true_T,
                        tr.times.front()});
  }
  write_json(dir / "manifest.json", manifest_to_json(m));
  return m;
}

void write_posterior_log(std::ostream& out, std::span<const evaluate::PosteriorRecord> records,
                         std::span<const std::string> dest_ids) {
  const std::size_t q = records.empty() ? 0 : records.front().arrival.size();
  out << 't';
  for (const auto& id : dest_ids) out << ",u_" << id;
  for (std::size_t i = 1; i <= q; ++i) out << ",v" << i;
  out << ",map\n";
  for (const auto& r : records) {
    out << format_number(r.t);
    for (double u : r.dest_probs) out << ',' << format_number(u);
    for (double v : r.arrival) out << ',' << format_number(v);
    out << ',' << r.map << '\n';
  }
}

std::string posterior_log(std::span<const evaluate::PosteriorRecord> records, std::span<const std::string> dest_ids) {
  std::ostringstream out;
  write_posterior_log(out, records, dest_ids);
  return out.str();
}

PosteriorLog read_posterior_log(const std::filesystem::path& path) {
  const auto table = read_table(path);
  const auto& h = table.header;
  if (h.size() < 3 || h.front() != "t" || h.back() != "map") {
    throw DataError(path.string() + ":1: expected header t,u_...,v...,map");
  }
  PosteriorLog log;
  std::size_t q = 0;
  for (std::size_t c = 1; c + 1 < h.size(); ++c) {
    if (h[c].rfind("u_", 0) == 0) {
      if (q > 0) throw DataError(path.string() + ":1: column " + h[c] + " after the arrival columns");
      log.dest_ids.push_back(h[c].substr(2));
    } else if (h[c].rfind('v', 0) == 0) {
      ++q;
    } else {
      throw DataError(path.string() + ":1: unexpected column " + h[c]);
    }
  }
  const std::size_t N = log.dest_ids.size();
  for (const auto& row : table.rows) {
    evaluate::PosteriorRecord r;
    r.t = row[0];
    r.dest_probs.assign(row.begin() + 1, row.begin() + 1 + static_cast<std::ptrdiff_t>(N));
    r.arrival.assign(row.begin() + 1 + static_cast<std::ptrdiff_t>(N), row.end() - 1);
    r.map = static_cast<int>(row.back());
    log.records.push_back(std::move(r));
  }
  return log;
}

}  // namespace bridgeintent::io

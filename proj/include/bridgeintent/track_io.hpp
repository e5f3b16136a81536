#pragma once

// Delimited-text track files, the simulation manifest and posterior logs.
//
//   <id>.obs.csv        t,y1..yk
//   <id>.truth.csv      t,x1..xr        (last row is the arrival state)
//   manifest.json       scenario, seed, dt and one entry per track
//   <id>.posterior.csv  t,u_<dest id>...,v1..vq,map

#include "bridgeintent/evaluate.hpp"
#include "bridgeintent/scenario_io.hpp"
#include "bridgeintent/simulate.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace bridgeintent::io {

/// Parsed delimited-text table. Every data row has the header's width.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// Reads a comma-separated table; DataError names the file and line on
/// ragged rows or unparseable numbers.
Table read_table(std::istream& in, const std::string& source);
Table read_table(const std::filesystem::path& path);

void write_observations(std::ostream& out, const simulate::ObservationSet& obs);
void write_truth(std::ostream& out, const simulate::Track& track);

/// Observation times must strictly increase; `noise` is attached as is.
simulate::ObservationSet read_observations(const std::filesystem::path& path, int obs_dims, const Matrix& noise);
simulate::Track read_truth(const std::filesystem::path& path, int state_dims);

struct ManifestEntry {
  std::string id;
  std::size_t index = 0;
  std::size_t dest = 0;
  std::string dest_id;
  double T = 0.0;
  double t0 = 0.0;
};

struct Manifest {
  std::string scenario;  // path as given on the command line
  std::uint64_t seed = 0;
  double dt = 1.0;
  std::vector<ManifestEntry> tracks;
};

nlohmann::json manifest_to_json(const Manifest& manifest);
Manifest parse_manifest(const nlohmann::json& doc, const std::string& source);
Manifest load_manifest(const std::filesystem::path& path);

/// Writes the observation and truth files of every track plus manifest.json.
Manifest write_tracks(const std::filesystem::path& dir, const intent::Scenario& scenario,
                      std::span<const simulate::SimulatedTrack> tracks, const std::string& scenario_path,
                      std::uint64_t seed, double dt);

void write_posterior_log(std::ostream& out, std::span<const evaluate::PosteriorRecord> records,
                         std::span<const std::string> dest_ids);
std::string posterior_log(std::span<const evaluate::PosteriorRecord> records, std::span<const std::string> dest_ids);

struct PosteriorLog {
  std::vector<std::string> dest_ids;
  std::vector<evaluate::PosteriorRecord> records;
};
PosteriorLog read_posterior_log(const std::filesystem::path& path);

}  // namespace bridgeintent::io

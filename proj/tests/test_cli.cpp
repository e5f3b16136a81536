#include "doctest.h"

#include "bridgeintent/cli.hpp"
#include "bridgeintent/scenario_io.hpp"
#include "bridgeintent/track_io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace bridgeintent;
namespace fs = std::filesystem;

namespace {

const fs::path kBay = BRIDGEINTENT_SOURCE_DIR "/scenarios/bay.json";

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("bridgeintent_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(run({}).code == cli::kUsage);
  CHECK(run({"launch"}).code == cli::kUsage);
  CHECK(run({"infer", "--q"}).code == cli::kUsage);
  CHECK(run({"infer", "--scenario", kBay.string(), "--track", "x", "--method", "psychic"}).code == cli::kUsage);
  CHECK(run({"infer"}).code == cli::kUsage);
  CHECK(run({"--help"}).code == cli::kOk);
}

TEST_CASE("data errors exit 3 with a diagnostic") {
  const auto dir = scratch("data_errors");
  auto r = run({"simulate", "--scenario", (dir / "nope.json").string()});
  CHECK(r.code == cli::kDataError);
  CHECK(r.err.find("nope.json") != std::string::npos);

  write_text(dir / "bad.json", R"({"model": {"kind": "CV", "spatial_dims": 2}})");
  r = run({"simulate", "--scenario", (dir / "bad.json").string()});
  CHECK(r.code == cli::kDataError);
  CHECK(r.err.find("bad.json.model.sigma") != std::string::npos);

  write_text(dir / "t9.obs.csv", "t,y1,y2\n0,0,-20000\n1,0,oops\n");
  r = run({"infer", "--scenario", kBay.string(), "--track", (dir / "t9.obs.csv").string()});
  CHECK(r.code == cli::kDataError);
  CHECK(r.err.find("t9.obs.csv:3") != std::string::npos);

  // observations past every arrival time
  write_text(dir / "late.obs.csv", "t,y1,y2\n0,0,-20000\n100,0,-15000\n260,0,-10000\n");
  r = run({"infer", "--scenario", kBay.string(), "--track", "late", "--tracks", dir.string()});
  CHECK(r.code == cli::kDataError);
  CHECK(r.err.find("track late") != std::string::npos);
  CHECK(r.err.find("arrival window exceeded") != std::string::npos);
}

TEST_CASE("simulate, infer and evaluate round trip") {
  const auto dir = scratch("round_trip");
  const auto tracks = dir / "tracks";
  auto r = run({"simulate", "--scenario", kBay.string(), "--tracks", "4", "--seed", "7", "--dt", "5", "--out",
                tracks.string()});
  REQUIRE(r.code == cli::kOk);
  const auto manifest = io::load_manifest(tracks / "manifest.json");
  CHECK(manifest.seed == 7);
  CHECK(manifest.dt == 5.0);
  CHECK(manifest.scenario == kBay.string());
  REQUIRE(manifest.tracks.size() == 4);

  // the same seed reproduces the files byte for byte
  const auto again = dir / "again";
  REQUIRE(run({"simulate", "--scenario", kBay.string(), "--tracks", "4", "--seed", "7", "--dt", "5", "--out",
               again.string()})
              .code == cli::kOk);
  CHECK(slurp(tracks / "t003.obs.csv") == slurp(again / "t003.obs.csv"));

  r = run({"infer", "--scenario", kBay.string(), "--tracks", tracks.string(), "--q", "5"});
  REQUIRE(r.code == cli::kOk);
  const auto batch = slurp(tracks / "t002.posterior.csv");
  CHECK(batch.rfind("t,u_H1,u_H2,u_H3,u_H4,u_H5,u_H6,v1,v2,v3,v4,v5,map\n", 0) == 0);

  r = run({"infer", "--scenario", kBay.string(), "--tracks", tracks.string(), "--track", "t002", "--q", "5"});
  REQUIRE(r.code == cli::kOk);
  CHECK(r.out == batch);

  const auto log = io::read_posterior_log(tracks / "t002.posterior.csv");
  CHECK(log.records.size() == io::read_observations(tracks / "t002.obs.csv", 2, Matrix::Identity(2, 2)).size());

  r = run({"evaluate", "--tracks", tracks.string(), "--bins", "10", "--out", (dir / "curve.csv").string()});
  REQUIRE(r.code == cli::kOk);
  CHECK(r.out.find("proportion_correct") != std::string::npos);
  CHECK(r.out.find("tracks 4") != std::string::npos);
  const auto curve = io::read_table(dir / "curve.csv");
  CHECK(curve.header == std::vector<std::string>{"progress", "success"});
  CHECK(curve.rows.size() == 10);

  SUBCASE("benchmark methods share the log format") {
    const auto out = dir / "nn.csv";
    r = run({"infer", "--scenario", kBay.string(), "--tracks", tracks.string(), "--track", "t001", "--method", "nn",
             "--nn-var", "1e8", "--out", out.string()});
    REQUIRE(r.code == cli::kOk);
    const auto nn = io::read_posterior_log(out);
    CHECK(nn.dest_ids.size() == 6);
    CHECK(nn.records.front().arrival.empty());
  }
  SUBCASE("snapshot and predict") {
    const auto snap = dir / "bank.json";
    r = run({"infer", "--scenario", kBay.string(), "--tracks", tracks.string(), "--track", "t001", "--q", "5",
             "--snapshot-out", snap.string()});
    REQUIRE(r.code == cli::kOk);
    const auto last_t = io::read_posterior_log(tracks / "t001.posterior.csv").records.back().t;
    const auto t1 = std::to_string(last_t + 10.0);
    r = run({"predict", "--snapshot", snap.string(), "--t", t1 + ",250", "--out", (dir / "mix.csv").string()});
    REQUIRE(r.code == cli::kOk);
    // dest_id is text, so split by hand
    std::istringstream mix(slurp(dir / "mix.csv"));
    std::string line;
    std::getline(mix, line);
    CHECK(std::count(line.begin(), line.end(), ',') == 7 + 4 + 16 - 1);
    double w = 0.0;
    while (std::getline(mix, line)) {
      std::vector<std::string> cells;
      std::stringstream ss(line);
      for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
      if (std::stod(cells[0]) == 250.0) w += std::stod(cells[5]);
    }
    CHECK(w == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(run({"predict", "--snapshot", snap.string(), "--t", "0"}).code == cli::kDataError);
  }
}

TEST_CASE("quadstudy prints one row per q") {
  const auto r = run({"quadstudy", "--scenario", kBay.string(), "--q", "1,3", "--tracks", "2", "--dt", "10"});
  REQUIRE(r.code == cli::kOk);
  std::istringstream in(r.out);
  const auto table = io::read_table(in, "quadstudy");
  CHECK(table.header == std::vector<std::string>{"q", "mean", "std", "n"});
  REQUIRE(table.rows.size() == 2);
  CHECK(table.rows[1][0] == 3);
  CHECK(table.rows[1][3] == 2);
  CHECK(run({"quadstudy", "--scenario", kBay.string(), "--q", "4"}).code == cli::kUsage);
}

TEST_CASE("fit writes a model fragment") {
  const auto dir = scratch("fit");
  write_text(dir / "mrd.json", R"({
    "model": {"kind": "MRD", "spatial_dims": 1, "sigma": 1, "lambda": 0.3},
    "destinations": [{"id": "L", "position": [-10]}, {"id": "R", "position": [10]}],
    "arrival_prior": {"type": "uniform", "lower": 20, "upper": 30},
    "observation_noise": {"std": 0.2},
    "initial_prior": {"mean": [0], "std": 1}
  })");
  const auto scn = (dir / "mrd.json").string();
  REQUIRE(run({"simulate", "--scenario", scn, "--tracks", "6", "--seed", "2", "--dt", "0.5", "--out",
               (dir / "tracks").string()})
              .code == cli::kOk);
  const auto r = run({"fit", "--scenario", scn, "--tracks", (dir / "tracks").string(), "--grid", "0.1:0.6:0.1",
                      "--out", (dir / "fit.json").string()});
  REQUIRE(r.code == cli::kOk);
  std::ifstream in(dir / "fit.json");
  const auto doc = nlohmann::json::parse(in);
  const auto model = io::parse_model(doc["model"], "fit.model");
  CHECK(model.kind == motion::ModelKind::MRD);
  CHECK(std::abs(model.reversion(0) - 0.3) <= 0.1 + 1e-12);
  CHECK(doc["grid"].size() == 6);
  CHECK(run({"fit", "--scenario", scn, "--tracks", (dir / "tracks").string(), "--param", "eta"}).code ==
        cli::kUsage);
}

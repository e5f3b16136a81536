#pragma once

// Scenario files: JSON documents describing destinations, the motion model,
// arrival-time priors, observation noise and the initial state prior.

#include "bridgeintent/intent.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace bridgeintent::io {

/// Malformed input file; the message names the file and the field or line.
class DataError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

struct SimulationDefaults {
  double dt = 1.0;
  int tracks = 100;
  std::uint64_t seed = 1;
  int q = 15;
};

struct ScenarioFile {
  intent::Scenario scenario;
  SimulationDefaults simulation;
};

ScenarioFile parse_scenario(const nlohmann::json& doc, const std::string& source = "scenario");
ScenarioFile load_scenario(const std::filesystem::path& path);

nlohmann::json scenario_to_json(const intent::Scenario& scenario,
                                const std::optional<SimulationDefaults>& simulation = std::nullopt);
nlohmann::json model_to_json(const motion::ModelParams& model);
motion::ModelParams parse_model(const nlohmann::json& doc, const std::string& where);

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

}  // namespace bridgeintent::io

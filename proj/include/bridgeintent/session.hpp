#pragma once

// Real-time inference sessions. A session owns one filter bank; the client
// streams observations and gets the current posteriors back after each one.
// Transport-agnostic: messages are JSON objects in, JSON objects out. The
// schema is in docs/session_protocol.md.

#include "bridgeintent/intent.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace bridgeintent::session {

inline constexpr int kProtocolVersion = 1;

struct Config {
  /// Named scenarios for `start{scenario: "<name>"}` are read from
  /// <scenario_dir>/<name>.json.
  std::filesystem::path scenario_dir;
  int default_q = 9;
  int threads = 1;  // bank-cell parallelism within a session
};

/// Pointing-task defaults (centimetres, seconds) used by icon layouts and
/// custom destination lists.
struct PointingDefaults {
  double sigma = 30.0;         // velocity noise, cm s^-3/2
  double obs_std = 0.05;       // cm
  double start_std = 1.0;      // cm
  double velocity_std = 10.0;  // cm/s
  double arrival_lower = 0.1;  // s
  double arrival_upper = 2.0;  // s
};

/// n icons evenly spaced on a circle with `spacing` between neighbours,
/// centred on the origin where the pointer starts.
intent::Scenario circle_layout(int n, double spacing, const PointingDefaults& defaults = {});

/// Scenario over arbitrary 2D icon positions with the pointing defaults.
intent::Scenario pointing_scenario(const std::vector<Vector>& positions, const std::vector<std::string>& ids,
                                   const Vector& start, const PointingDefaults& defaults = {});

class Session {
 public:
  explicit Session(Config config = {});
  ~Session();
  Session(Session&&) noexcept;
  Session& operator=(Session&&) noexcept;

  /// Handles one request and returns exactly one reply. Never throws on bad
  /// client input; errors become `error` replies.
  nlohmann::json handle(const nlohmann::json& request);
  /// Same, from and to message text.
  std::string handle_text(std::string_view text);

  [[nodiscard]] bool started() const;
  /// Current bank; null before `start`.
  [[nodiscard]] const intent::FilterBank* bank() const;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

}  // namespace bridgeintent::session

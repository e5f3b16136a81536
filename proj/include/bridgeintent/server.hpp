#pragma once

// WebSocket transport for inference sessions. One Session per connection;
// plain HTTP GETs are answered from the demo directory if one is set.

#include "bridgeintent/session.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>

namespace bridgeintent::server {

struct Options {
  std::string address = "127.0.0.1";
  std::uint16_t port = 8765;  // 0 picks a free port
  session::Config session;
  std::filesystem::path demo_dir;
  std::chrono::milliseconds heartbeat{5000};  // WebSocket ping interval on idle connections
  int io_threads = 1;
  bool handle_signals = false;  // stop on SIGINT / SIGTERM
};

class Server {
 public:
  explicit Server(Options options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Port actually bound.
  [[nodiscard]] std::uint16_t port() const;
  /// Serves until stop(); blocks.
  void run();
  /// Safe from any thread.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace bridgeintent::server

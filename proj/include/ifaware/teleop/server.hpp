#pragma once

// HTTP + WebSocket front end for SessionManager.
//
//   POST /profiles                 create a profile
//   GET  /profiles/{id}            fetch a profile
//   POST /sessions                 create a session, returns its id and first state
//   GET  /sessions/{id}            current state message
//   POST /sessions/{id}/finish     fit calibration tables ({"alpha": x})
//   GET  /sessions/{id}/trace      persisted JSON-lines trace
//   WS   /sessions/{id}/ws         live stream; client sends {"type":"action","phi":..,"ts":..}

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "ifaware/teleop/session_manager.hpp"

namespace ifaware::teleop {

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8080;  // 0 binds an ephemeral port
  std::filesystem::path data_dir = "data";
  std::optional<std::filesystem::path> static_dir;  // serves the browser UI when set
  unsigned threads = 1;
  double tick_interval_s = 0.1;
};

class TeleopServer {
 public:
  explicit TeleopServer(ServerOptions opts, Clock clock = steady_clock_seconds());
  ~TeleopServer();

  TeleopServer(const TeleopServer&) = delete;
  TeleopServer& operator=(const TeleopServer&) = delete;

  /// Starts worker threads and returns; the bound port is then available.
  void start();
  /// Runs until stop() is called from another thread or a signal handler.
  void run();
  void stop();

  unsigned short port() const;
  SessionManager& sessions();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Dispatches one HTTP request. Exposed for in-process tests.
struct HttpReply {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};
HttpReply handle_http(SessionManager& sessions, const std::string& method, const std::string& target,
                      const std::string& body);

}  // namespace ifaware::teleop

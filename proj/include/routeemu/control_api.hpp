#pragma once

#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "routeemu/report.hpp"
#include "routeemu/session_runner.hpp"

namespace httplib {
class Server;
}

namespace routeemu {

/// HTTP control surface for one replay session.
///
///   GET  /status                  session state
///   GET  /scenario?path_id=&variant=raw|corrected   scenario CSV
///   POST /control                 {"cmd": start|pause|resume|seek|set_speed, ...}
///   POST /pipeline/correct        CorrectionParams JSON -> intervals JSON
///   GET  /events?kinds=&path_id=  NDJSON event stream
///   GET  /report                  ComparisonResult JSON, when configured
class ControlServer {
 public:
  explicit ControlServer(SessionRunner& runner,
                         std::optional<ComparisonResult> comparison = std::nullopt);
  ~ControlServer();

  ControlServer(const ControlServer&) = delete;
  ControlServer& operator=(const ControlServer&) = delete;

  /// Binds and serves from a background thread; port 0 picks a free port.
  /// Returns the bound port, throws Error(bind_failure).
  int start(const std::string& host, int port);
  void stop();
  int port() const { return port_; }

 private:
  void routes();

  SessionRunner& runner_;
  std::optional<ComparisonResult> comparison_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace routeemu

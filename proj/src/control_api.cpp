#include "routeemu/control_api.hpp"

#include <sstream>

#include "httplib.h"
#include "json.hpp"
#include "routeemu/error.hpp"
#include "routeemu/ingest.hpp"
#include "routeemu/json_io.hpp"
#include "routeemu/scenario_pipeline.hpp"

namespace routeemu {

using nlohmann::json;

namespace {

int status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_transition: return 409;
    case ErrorKind::session_not_found: return 404;
    default: return 400;
  }
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const Error& e) {
  send_json(res, {{"error", to_string(e.kind())}, {"message", e.what()}}, status_for(e.kind()));
}

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    send_error(res, e);
  } catch (const json::exception& e) {
    send_json(res, {{"error", "InvalidArgument"}, {"message", e.what()}}, 400);
  }
}

std::optional<EventKind> parse_kind(std::string_view s) {
  for (auto k : {EventKind::position, EventKind::link_params, EventKind::probe_report, EventKind::state_change})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

}  // namespace

ControlServer::ControlServer(SessionRunner& runner, std::optional<ComparisonResult> comparison)
    : runner_(runner), comparison_(std::move(comparison)), server_(std::make_unique<httplib::Server>()) {
  // httplib defaults to SO_REUSEPORT, which lets a second server share the port silently.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  routes();
}

ControlServer::~ControlServer() { stop(); }

void ControlServer::routes() {
  auto& srv = *server_;

  srv.Get("/status", [this](const httplib::Request&, httplib::Response& res) {
    send_json(res, to_json(runner_.state()));
  });

  srv.Post("/control", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto cmd = control_command_from_json(json::parse(req.body));
      send_json(res, to_json(runner_.control(cmd)));
    });
  });

  srv.Get("/scenario", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto path_id = req.get_param_value("path_id");
      const auto variant =
          req.get_param_value("variant") == "corrected" ? ScenarioVariant::corrected : ScenarioVariant::raw;
      const auto csv = runner_.with_session([&](ReplaySession& s) {
        std::optional<std::size_t> idx = path_id.empty() && s.path_count() == 1 ? std::optional<std::size_t>(0)
                                                                                 : s.index_of(path_id);
        if (!idx) throw Error(ErrorKind::session_not_found, "no path '" + path_id + "'");
        if (variant == ScenarioVariant::corrected && !s.has_corrected(*idx))
          throw Error(ErrorKind::session_not_found, "no corrected scenario for '" + s.path_id(*idx) + "'");
        return write_scenario_csv(s.scenario(*idx, variant));
      });
      res.set_content(csv, "text/csv");
    });
  });

  srv.Post("/pipeline/correct", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = req.body.empty() ? json::object() : json::parse(req.body);
      const auto params = correction_params_from_json(body);
      const auto only = body.is_object() ? body.value("path_id", std::string()) : std::string();
      const json result = runner_.with_session([&](ReplaySession& s) {
        if (!only.empty() && !s.index_of(only)) throw Error(ErrorKind::session_not_found, "no path '" + only + "'");
        json paths = json::array();
        for (std::size_t i = 0; i < s.path_count(); ++i) {
          if (!only.empty() && s.path_id(i) != only) continue;
          auto corrected = correct_delay(s.scenario(i, ScenarioVariant::raw), params);
          s.set_corrected(i, std::move(corrected.scenario));
          paths.push_back({{"path_id", s.path_id(i)}, {"intervals", to_json(corrected.intervals)}});
        }
        return json{{"params", to_json(params)}, {"paths", std::move(paths)}};
      });
      send_json(res, result);
    });
  });

  srv.Get("/events", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      EventFilter filter;
      filter.path_id = req.get_param_value("path_id");
      std::stringstream kinds(req.get_param_value("kinds"));
      for (std::string k; std::getline(kinds, k, ',');) {
        if (k.empty()) continue;
        const auto kind = parse_kind(k);
        if (!kind) throw Error(ErrorKind::invalid_argument, "unknown event kind '" + k + "'");
        filter.kinds.insert(*kind);
      }
      if (!filter.path_id.empty()) {
        const bool known = runner_.with_session([&](ReplaySession& s) { return s.index_of(filter.path_id).has_value(); });
        if (!known) throw Error(ErrorKind::session_not_found, "no path '" + filter.path_id + "'");
      }
      auto sub = runner_.subscribe(std::move(filter));
      res.set_chunked_content_provider(
          "application/x-ndjson",
          [sub, srv = server_.get()](std::size_t, httplib::DataSink& sink) {
            if (!srv->is_running()) return false;
            if (auto e = sub->next(std::chrono::milliseconds(100))) {
              const auto line = to_json(*e).dump() + "\n";
              return sink.write(line.data(), line.size());
            }
            if (sub->ended()) sink.done();
            return true;
          },
          [sub](bool) { sub->close(); });
    });
  });

  srv.Get("/report", [this](const httplib::Request&, httplib::Response& res) {
    if (!comparison_) {
      send_json(res, {{"error", "NotConfigured"}, {"message", "no comparison run configured"}}, 404);
      return;
    }
    send_json(res, to_json(*comparison_));
  });
}

int ControlServer::start(const std::string& host, int port) {
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
  } else {
    port_ = server_->bind_to_port(host, port) ? port : -1;
  }
  if (port_ <= 0) throw Error(ErrorKind::bind_failure, "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void ControlServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace routeemu

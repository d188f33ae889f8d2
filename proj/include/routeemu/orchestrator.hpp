#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "routeemu/link_emulator.hpp"
#include "routeemu/probe.hpp"
#include "routeemu/trace_model.hpp"

namespace routeemu {

enum class ReplayMode { simulated, udp_proxy, tc_script };
enum class ClockKind { none, virtual_clock, wall };

struct PathConfig {
  std::string path_id;
  std::string scenario_file;
  LinkConfig link_config;
  std::uint16_t listen_port = 0;  // udp_proxy; 0 picks an ephemeral port
  std::string interface_name = "eth0";  // tc_script
};

struct Endpoints {
  std::string bind_host = "127.0.0.1";
  std::string receiver_host = "127.0.0.1";
  std::uint16_t receiver_port = 0;
};

struct ComparisonFiles {
  std::string field;
  std::string raw;
  std::string corrected;
  std::string intervals;  // optional
};

struct TopologyConfig {
  std::vector<PathConfig> paths;
  ReplayMode mode = ReplayMode::simulated;
  ClockKind clock = ClockKind::virtual_clock;
  Endpoints endpoints;
  int position_stream_hz = 20;
  std::optional<ProbeConfig> probe;
  std::optional<ComparisonFiles> comparison;
  std::string base_dir;  // relative file names resolve against this
};

/// Parses and validates a topology JSON document.
TopologyConfig parse_topology(std::string_view json_text, std::string base_dir = {});
TopologyConfig load_topology(const std::string& file);
std::string resolve_path(const TopologyConfig& cfg, const std::string& file);

std::string_view to_string(ReplayMode mode);
std::string_view to_string(ClockKind clock);

enum class ReplayStatus { idle, running, paused, finished };
std::string_view to_string(ReplayStatus status);

enum class ScenarioVariant { raw, corrected };

struct PathState {
  std::string path_id;
  LinkParams params;
};

struct ReplayState {
  ReplayStatus status = ReplayStatus::idle;
  TimeMs t_ms = 0;
  double speed = 1.0;
  double lat_deg = 0.0;
  double lon_deg = 0.0;
  ScenarioVariant variant = ScenarioVariant::raw;
  std::vector<PathState> paths;
};

enum class ControlKind { start, pause, resume, seek, set_speed };

struct ControlCommand {
  ControlKind kind = ControlKind::start;
  TimeMs t_ms = 0;    // seek
  double speed = 1.0;  // set_speed
  ScenarioVariant variant = ScenarioVariant::raw;  // start
};

enum class EventKind { position, link_params, probe_report, state_change };
std::string_view to_string(EventKind kind);

struct ApiEvent {
  double t_ms = 0.0;
  EventKind kind = EventKind::state_change;
  std::string path_id;
  std::variant<PositionSample, LinkParams, ProbeReport, ReplayStatus> payload;
};

struct PathSetup {
  std::string path_id;
  Scenario scenario;
  LinkConfig link;
};

struct TaggedPacket {
  std::string path_id;
  Packet packet;
};

struct SessionOptions {
  int position_stream_hz = 20;
  double drain_ms = 2000.0;
  std::optional<ProbeConfig> probe;  // one CBR probe per path
  bool record_egress = false;
};

/// One multipath replay, single-threaded and clock-agnostic: the caller moves
/// time forward with advance_to(). All scenarios share one grid and epoch.
class ReplaySession {
 public:
  ReplaySession(std::vector<PathSetup> paths, SessionOptions options = {});

  /// Throws Error(invalid_transition) when the command is not valid now.
  ReplayState control(const ControlCommand& cmd);
  ReplayState state() const;
  ReplayStatus status() const { return status_; }

  /// Processes every tick, workload packet and link event up to t_ms.
  /// No-op unless running.
  void advance_to(double t_ms);
  void run_to_end();
  /// Earliest time with pending work (tick, workload packet or link event), capped at finish.
  double next_event_ms() const;

  /// Injects an external packet at packet.ingress_ts_ms (clamped to now).
  void submit(std::size_t path, Packet packet);
  void add_workload(std::vector<TaggedPacket> packets);

  double now() const { return now_; }
  double timeline_end_ms() const { return static_cast<double>(timeline_end_); }
  double finish_ms() const { return timeline_end_ + options_.drain_ms; }

  std::size_t path_count() const { return paths_.size(); }
  std::optional<std::size_t> index_of(std::string_view path_id) const;
  const std::string& path_id(std::size_t path) const { return paths_[path].id; }
  const Scenario& scenario(std::size_t path, ScenarioVariant variant = ScenarioVariant::raw) const;
  bool has_corrected(std::size_t path) const { return paths_[path].corrected.has_value(); }
  void set_corrected(std::size_t path, Scenario corrected);

  const std::vector<ProbeReport>& reports(std::size_t path) const { return paths_[path].reports; }
  const std::vector<EgressEvent>& egress_log(std::size_t path) const { return paths_[path].egress; }
  const SessionOptions& options() const { return options_; }

  void set_event_handler(std::function<void(const ApiEvent&)> handler);
  void set_egress_handler(std::function<void(std::size_t, const EgressEvent&)> handler);

 private:
  struct PathRuntime {
    std::string id;
    Scenario raw;
    std::optional<Scenario> corrected;
    LinkConfig link_config;
    Link link;
    std::vector<Packet> workload;
    std::size_t next_packet = 0;
    std::optional<ProbeAggregator> aggregator;
    std::vector<ProbeReport> reports;
    std::vector<EgressEvent> egress;
  };

  const Scenario& driving(const PathRuntime& p) const;
  void rewind(TimeMs t_ms);
  void apply_tick(std::size_t tick);
  void collect(PathRuntime& p, std::size_t index, double t_ms);
  void finish_run();
  void emit(ApiEvent event);
  void set_status(ReplayStatus status);
  const ScenarioRow& row_at(const PathRuntime& p, std::size_t tick) const;

  std::vector<PathRuntime> paths_;
  SessionOptions options_;
  TimeMs epoch_ = 0;
  TimeMs delta_ = kDefaultGridMs;
  TimeMs timeline_end_ = 0;
  std::size_t tick_count_ = 0;

  ReplayStatus status_ = ReplayStatus::idle;
  ScenarioVariant variant_ = ScenarioVariant::raw;
  double speed_ = 1.0;
  double now_ = 0.0;
  std::size_t next_tick_ = 0;
  std::size_t current_row_ = 0;
  std::int64_t last_position_slot_ = -1;

  std::function<void(const ApiEvent&)> on_event_;
  std::function<void(std::size_t, const EgressEvent&)> on_egress_;
};

struct PathOutput {
  std::string path_id;
  std::vector<EgressEvent> events;
  std::vector<ProbeReport> reports;
};

struct ReplayOutput {
  std::vector<PathOutput> paths;
  std::vector<ApiEvent> events;
};

/// Simulated-mode replay on the virtual clock, run to completion. Workload
/// packets are routed to the path named by their tag.
ReplayOutput run_replay(std::vector<PathSetup> paths, SessionOptions options,
                        std::vector<TaggedPacket> workload = {});

/// Loads every scenario named by the topology and checks they share a grid.
std::vector<PathSetup> load_paths(const TopologyConfig& cfg);

}  // namespace routeemu

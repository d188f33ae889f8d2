#include "routeemu/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <set>

#include "json.hpp"
#include "routeemu/error.hpp"
#include "routeemu/ingest.hpp"

namespace routeemu {

using nlohmann::json;

std::string_view to_string(ReplayMode mode) {
  switch (mode) {
    case ReplayMode::simulated: return "simulated";
    case ReplayMode::udp_proxy: return "udp_proxy";
    case ReplayMode::tc_script: return "tc_script";
  }
  return "simulated";
}

std::string_view to_string(ClockKind clock) {
  switch (clock) {
    case ClockKind::none: return "none";
    case ClockKind::virtual_clock: return "virtual";
    case ClockKind::wall: return "wall";
  }
  return "none";
}

std::string_view to_string(ReplayStatus status) {
  switch (status) {
    case ReplayStatus::idle: return "idle";
    case ReplayStatus::running: return "running";
    case ReplayStatus::paused: return "paused";
    case ReplayStatus::finished: return "finished";
  }
  return "idle";
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::position: return "position";
    case EventKind::link_params: return "link_params";
    case EventKind::probe_report: return "probe_report";
    case EventKind::state_change: return "state_change";
  }
  return "state_change";
}

namespace {

ReplayMode parse_mode(const std::string& s) {
  if (s == "simulated") return ReplayMode::simulated;
  if (s == "udp_proxy" || s == "udp-proxy") return ReplayMode::udp_proxy;
  if (s == "tc_script" || s == "tc-script") return ReplayMode::tc_script;
  throw Error(ErrorKind::invalid_argument, "unknown mode '" + s + "'");
}

ClockKind parse_clock(const std::string& s) {
  if (s == "virtual") return ClockKind::virtual_clock;
  if (s == "wall") return ClockKind::wall;
  if (s == "none") return ClockKind::none;
  throw Error(ErrorKind::invalid_argument, "unknown clock '" + s + "'");
}

ClockKind default_clock(ReplayMode mode) {
  switch (mode) {
    case ReplayMode::simulated: return ClockKind::virtual_clock;
    case ReplayMode::udp_proxy: return ClockKind::wall;
    case ReplayMode::tc_script: return ClockKind::none;
  }
  return ClockKind::virtual_clock;
}

LinkConfig link_config_from_json(const json& j) {
  LinkConfig c;
  if (j.contains("queue_capacity_bytes")) c.queue_capacity_bytes = j.at("queue_capacity_bytes").get<double>();
  if (j.contains("bucket_depth_bytes")) c.bucket_depth_bytes = j.at("bucket_depth_bytes").get<double>();
  c.mtu_bytes = j.value("mtu_bytes", c.mtu_bytes);
  c.rng_seed = j.value("rng_seed", c.rng_seed);
  if (c.mtu_bytes == 0 || (c.queue_capacity_bytes && *c.queue_capacity_bytes <= 0) ||
      (c.bucket_depth_bytes && *c.bucket_depth_bytes <= 0))
    throw Error(ErrorKind::invalid_argument, "link_config values must be positive");
  return c;
}

ProbeConfig probe_from_json(const json& j) {
  ProbeConfig p;
  p.offered_load_bps = j.value("offered_load_bps", p.offered_load_bps);
  p.packet_size_bytes = j.value("packet_size_bytes", p.packet_size_bytes);
  p.report_interval_ms = j.value("report_interval_ms", p.report_interval_ms);
  p.duration_ms = j.value("duration_ms", p.duration_ms);
  p.seed = j.value("seed", p.seed);
  validate(p);
  return p;
}

}  // namespace

TopologyConfig parse_topology(std::string_view json_text, std::string base_dir) {
  TopologyConfig cfg;
  cfg.base_dir = std::move(base_dir);
  try {
    const json j = json::parse(json_text);
    cfg.mode = parse_mode(j.value("mode", std::string("simulated")));
    cfg.clock = j.contains("clock") ? parse_clock(j.at("clock").get<std::string>()) : default_clock(cfg.mode);
    cfg.position_stream_hz = j.value("position_stream_hz", cfg.position_stream_hz);
    if (j.contains("endpoints")) {
      const auto& e = j.at("endpoints");
      cfg.endpoints.bind_host = e.value("bind_host", cfg.endpoints.bind_host);
      if (e.contains("receiver")) {
        const auto r = e.at("receiver").get<std::string>();
        const auto colon = r.rfind(':');
        if (colon == std::string::npos) throw Error(ErrorKind::invalid_argument, "receiver must be host:port");
        cfg.endpoints.receiver_host = r.substr(0, colon);
        cfg.endpoints.receiver_port = static_cast<std::uint16_t>(std::stoi(r.substr(colon + 1)));
      }
    }
    if (j.contains("probe")) cfg.probe = probe_from_json(j.at("probe"));
    if (j.contains("comparison")) {
      const auto& c = j.at("comparison");
      cfg.comparison = ComparisonFiles{c.at("field").get<std::string>(), c.at("raw").get<std::string>(),
                                       c.at("corrected").get<std::string>(), c.value("intervals", std::string())};
    }
    for (const auto& p : j.at("paths")) {
      PathConfig pc;
      pc.path_id = p.at("path_id").get<std::string>();
      pc.scenario_file = p.at("scenario_file").get<std::string>();
      if (p.contains("link_config")) pc.link_config = link_config_from_json(p.at("link_config"));
      pc.listen_port = p.value("listen_port", std::uint16_t{0});
      pc.interface_name = p.value("interface", pc.interface_name);
      cfg.paths.push_back(std::move(pc));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::invalid_argument, std::string("topology: ") + e.what());
  }

  if (cfg.paths.empty()) throw Error(ErrorKind::invalid_argument, "topology needs at least one path");
  std::set<std::string> ids;
  for (const auto& p : cfg.paths) {
    if (p.path_id.empty()) throw Error(ErrorKind::invalid_argument, "path_id must not be empty");
    if (!ids.insert(p.path_id).second) throw Error(ErrorKind::invalid_argument, "duplicate path_id '" + p.path_id + "'");
  }
  if (cfg.clock != default_clock(cfg.mode))
    throw Error(ErrorKind::invalid_argument, std::string("mode ") + std::string(to_string(cfg.mode)) +
                                                 " is incompatible with clock " + std::string(to_string(cfg.clock)));
  if (cfg.position_stream_hz <= 0) throw Error(ErrorKind::invalid_argument, "position_stream_hz must be > 0");
  return cfg;
}

TopologyConfig load_topology(const std::string& file) {
  const auto dir = std::filesystem::path(file).parent_path().string();
  return parse_topology(read_file(file), dir);
}

std::string resolve_path(const TopologyConfig& cfg, const std::string& file) {
  const std::filesystem::path p(file);
  if (p.is_absolute() || cfg.base_dir.empty()) return file;
  return (std::filesystem::path(cfg.base_dir) / p).string();
}

std::vector<PathSetup> load_paths(const TopologyConfig& cfg) {
  std::vector<PathSetup> out;
  for (const auto& p : cfg.paths) {
    out.push_back(PathSetup{p.path_id, read_scenario_csv(read_file(resolve_path(cfg, p.scenario_file)), p.path_id),
                            p.link_config});
  }
  return out;
}

// ---------------------------------------------------------------------------

ReplaySession::ReplaySession(std::vector<PathSetup> paths, SessionOptions options) : options_(std::move(options)) {
  if (paths.empty()) throw Error(ErrorKind::invalid_argument, "a replay needs at least one path");
  if (options_.position_stream_hz <= 0) throw Error(ErrorKind::invalid_argument, "position_stream_hz must be > 0");
  if (options_.drain_ms < 0.0) throw Error(ErrorKind::invalid_argument, "drain_ms must be >= 0");
  for (const auto& p : paths) {
    const auto violations = validate_scenario(p.scenario);
    if (!violations.empty())
      throw Error(ErrorKind::invalid_argument, "scenario " + p.path_id + ": " + describe(violations.front()));
  }
  epoch_ = paths.front().scenario.start_ms();
  delta_ = paths.front().scenario.delta_ms;
  for (const auto& p : paths) {
    if (p.scenario.delta_ms != delta_ || p.scenario.start_ms() != epoch_)
      throw Error(ErrorKind::scenario_mismatch, "path " + p.path_id + " does not share the grid/epoch of path " +
                                                    paths.front().path_id);
    tick_count_ = std::max(tick_count_, p.scenario.rows.size());
  }
  timeline_end_ = epoch_ + static_cast<TimeMs>(tick_count_) * delta_;

  std::set<std::string> ids;
  for (auto& p : paths) {
    if (!ids.insert(p.path_id).second) throw Error(ErrorKind::invalid_argument, "duplicate path_id " + p.path_id);
    p.scenario.path_id = p.path_id;
    PathRuntime rt{p.path_id, std::move(p.scenario), std::nullopt, p.link, Link(p.link), {}, 0, std::nullopt, {}, {}};
    paths_.push_back(std::move(rt));
  }

  if (options_.probe) {
    validate(*options_.probe);
    ProbeConfig shifted = *options_.probe;
    shifted.duration_ms = std::min(shifted.duration_ms, timeline_end_ - epoch_);
    for (auto& p : paths_) {
      for (const auto& s : send_schedule(shifted))
        p.workload.push_back(Packet{s.seq, s.size_bytes, static_cast<double>(epoch_) + s.send_ts_ms, {}});
    }
    shifted.duration_ms += epoch_;
    options_.probe = shifted;
  }
  now_ = static_cast<double>(epoch_);
  for (auto& p : paths_) p.link.reset(now_, params_from_row(p.raw.rows.front()));
}

std::optional<std::size_t> ReplaySession::index_of(std::string_view path_id) const {
  for (std::size_t i = 0; i < paths_.size(); ++i)
    if (paths_[i].id == path_id) return i;
  return std::nullopt;
}

const Scenario& ReplaySession::scenario(std::size_t path, ScenarioVariant variant) const {
  const auto& p = paths_.at(path);
  if (variant == ScenarioVariant::corrected && p.corrected) return *p.corrected;
  return p.raw;
}

const Scenario& ReplaySession::driving(const PathRuntime& p) const {
  return variant_ == ScenarioVariant::corrected && p.corrected ? *p.corrected : p.raw;
}

void ReplaySession::set_corrected(std::size_t path, Scenario corrected) {
  auto& p = paths_.at(path);
  if (variant_ == ScenarioVariant::corrected &&
      (status_ == ReplayStatus::running || status_ == ReplayStatus::paused))
    throw Error(ErrorKind::invalid_transition, "corrected scenario is driving the current run");
  if (corrected.delta_ms != p.raw.delta_ms || corrected.rows.size() != p.raw.rows.size() ||
      corrected.start_ms() != p.raw.start_ms())
    throw Error(ErrorKind::scenario_mismatch, "corrected scenario must share the raw scenario's grid");
  p.corrected = std::move(corrected);
}

void ReplaySession::set_event_handler(std::function<void(const ApiEvent&)> handler) { on_event_ = std::move(handler); }

void ReplaySession::set_egress_handler(std::function<void(std::size_t, const EgressEvent&)> handler) {
  on_egress_ = std::move(handler);
}

void ReplaySession::add_workload(std::vector<TaggedPacket> packets) {
  if (status_ != ReplayStatus::idle) throw Error(ErrorKind::invalid_transition, "workload must be added before start");
  if (options_.probe && !packets.empty())
    throw Error(ErrorKind::invalid_argument, "a session runs either the probe or an explicit workload");
  for (auto& tp : packets) {
    const auto idx = index_of(tp.path_id);
    if (!idx) throw Error(ErrorKind::invalid_argument, "workload packet for unknown path '" + tp.path_id + "'");
    paths_[*idx].workload.push_back(std::move(tp.packet));
  }
  for (auto& p : paths_)
    std::stable_sort(p.workload.begin(), p.workload.end(),
                     [](const Packet& a, const Packet& b) { return a.ingress_ts_ms < b.ingress_ts_ms; });
}

const ScenarioRow& ReplaySession::row_at(const PathRuntime& p, std::size_t tick) const {
  const auto& rows = driving(p).rows;
  return rows[std::min(tick, rows.size() - 1)];
}

void ReplaySession::emit(ApiEvent event) {
  if (on_event_) on_event_(event);
}

void ReplaySession::set_status(ReplayStatus status) {
  status_ = status;
  emit(ApiEvent{now_, EventKind::state_change, {}, status});
}

void ReplaySession::rewind(TimeMs t_ms) {
  const double t = static_cast<double>(t_ms);
  const auto rel = t_ms - epoch_;
  current_row_ = static_cast<std::size_t>(rel / delta_);
  next_tick_ = rel % delta_ == 0 ? current_row_ : current_row_ + 1;
  for (auto& p : paths_) {
    p.link.reset(t, params_from_row(row_at(p, current_row_)));
    p.next_packet = static_cast<std::size_t>(
        std::lower_bound(p.workload.begin(), p.workload.end(), t,
                         [](const Packet& pk, double v) { return pk.ingress_ts_ms < v; }) -
        p.workload.begin());
    p.reports.clear();
    p.egress.clear();
    p.aggregator.reset();
    if (options_.probe) {
      AggregateOptions ao;
      ao.start_ms = t;
      p.aggregator.emplace(*options_.probe, ao);
    }
  }
  now_ = t;
  last_position_slot_ = -1;
}

void ReplaySession::apply_tick(std::size_t tick) {
  const double t = static_cast<double>(epoch_ + static_cast<TimeMs>(tick) * delta_);
  current_row_ = tick;
  for (auto& p : paths_) {
    const auto params = params_from_row(row_at(p, tick));
    p.link.set_params(t, params);
    emit(ApiEvent{t, EventKind::link_params, p.id, params});
  }
  const auto slot = static_cast<std::int64_t>(
      std::floor((t - static_cast<double>(epoch_)) * options_.position_stream_hz / 1000.0));
  if (slot > last_position_slot_) {
    last_position_slot_ = slot;
    const auto& row = row_at(paths_.front(), tick);
    emit(ApiEvent{t, EventKind::position, {}, PositionSample{row.t_ms, row.lat_deg, row.lon_deg}});
  }
}

void ReplaySession::collect(PathRuntime& p, std::size_t index, double t_ms) {
  for (auto& e : p.link.run_until(t_ms)) {
    if (p.aggregator) p.aggregator->on_egress(e);
    if (on_egress_) on_egress_(index, e);
    if (options_.record_egress) p.egress.push_back(std::move(e));
  }
  if (!p.aggregator) return;
  for (auto& r : p.aggregator->poll(t_ms)) {
    p.reports.push_back(r);
    emit(ApiEvent{static_cast<double>(r.t_ms), EventKind::probe_report, p.id, r});
  }
}

void ReplaySession::finish_run() {
  for (auto& p : paths_) {
    if (!p.aggregator) continue;
    for (auto& r : p.aggregator->finish()) {
      p.reports.push_back(r);
      emit(ApiEvent{static_cast<double>(r.t_ms), EventKind::probe_report, p.id, r});
    }
  }
  set_status(ReplayStatus::finished);
}

void ReplaySession::advance_to(double t_ms) {
  if (status_ != ReplayStatus::running || !(t_ms >= now_)) return;
  const double target = std::min(t_ms, finish_ms());
  constexpr double kNever = std::numeric_limits<double>::infinity();
  while (true) {
    const double tick_t =
        next_tick_ < tick_count_ ? static_cast<double>(epoch_ + static_cast<TimeMs>(next_tick_) * delta_) : kNever;
    double pkt_t = kNever;
    std::size_t pkt_path = 0;
    for (std::size_t i = 0; i < paths_.size(); ++i) {
      const auto& p = paths_[i];
      if (p.next_packet < p.workload.size() && p.workload[p.next_packet].ingress_ts_ms < pkt_t) {
        pkt_t = p.workload[p.next_packet].ingress_ts_ms;
        pkt_path = i;
      }
    }
    if (std::min(tick_t, pkt_t) > target) break;
    if (tick_t <= pkt_t) {
      apply_tick(next_tick_++);
      continue;
    }
    auto& p = paths_[pkt_path];
    Packet pk = p.workload[p.next_packet++];
    if (p.aggregator) p.aggregator->on_send(SendRecord{pk.ingress_ts_ms, pk.seq, pk.size_bytes});
    p.link.ingress(std::move(pk));
  }
  for (std::size_t i = 0; i < paths_.size(); ++i) collect(paths_[i], i, target);
  now_ = target;
  if (now_ >= finish_ms()) finish_run();
}

void ReplaySession::run_to_end() { advance_to(finish_ms()); }

double ReplaySession::next_event_ms() const {
  double t = finish_ms();
  if (next_tick_ < tick_count_) t = std::min(t, static_cast<double>(epoch_ + static_cast<TimeMs>(next_tick_) * delta_));
  for (const auto& p : paths_) {
    if (p.next_packet < p.workload.size()) t = std::min(t, p.workload[p.next_packet].ingress_ts_ms);
    t = std::min(t, p.link.next_event_ms());
  }
  return std::max(t, now_);
}

void ReplaySession::submit(std::size_t path, Packet packet) {
  if (status_ != ReplayStatus::running) return;
  packet.ingress_ts_ms = std::max(packet.ingress_ts_ms, now_);
  advance_to(packet.ingress_ts_ms);
  if (status_ != ReplayStatus::running) return;
  paths_.at(path).link.ingress(std::move(packet));
}

ReplayState ReplaySession::state() const {
  ReplayState s;
  s.status = status_;
  s.t_ms = std::min(static_cast<TimeMs>(std::floor(now_)), timeline_end_);
  s.speed = speed_;
  s.variant = variant_;
  const auto& row = row_at(paths_.front(), current_row_);
  s.lat_deg = row.lat_deg;
  s.lon_deg = row.lon_deg;
  for (const auto& p : paths_) s.paths.push_back(PathState{p.id, p.link.params()});
  return s;
}

ReplayState ReplaySession::control(const ControlCommand& cmd) {
  auto invalid = [&](std::string_view what) {
    throw Error(ErrorKind::invalid_transition,
                std::string(what) + " is not valid while " + std::string(to_string(status_)));
  };
  switch (cmd.kind) {
    case ControlKind::start:
      if (status_ != ReplayStatus::idle && status_ != ReplayStatus::finished) invalid("start");
      if (cmd.variant == ScenarioVariant::corrected &&
          std::any_of(paths_.begin(), paths_.end(), [](const PathRuntime& p) { return !p.corrected; }))
        throw Error(ErrorKind::invalid_argument, "no corrected scenario available; run the correction first");
      variant_ = cmd.variant;
      rewind(epoch_);
      set_status(ReplayStatus::running);
      break;
    case ControlKind::pause:
      if (status_ != ReplayStatus::running) invalid("pause");
      set_status(ReplayStatus::paused);
      break;
    case ControlKind::resume:
      if (status_ != ReplayStatus::paused) invalid("resume");
      set_status(ReplayStatus::running);
      break;
    case ControlKind::seek:
      if (status_ != ReplayStatus::paused) invalid("seek");
      if (cmd.t_ms < epoch_ || cmd.t_ms >= timeline_end_)
        throw Error(ErrorKind::invalid_argument, "seek target " + std::to_string(cmd.t_ms) + " ms outside the timeline");
      rewind(cmd.t_ms);
      break;
    case ControlKind::set_speed:
      if (!(cmd.speed > 0.0) || !std::isfinite(cmd.speed))
        throw Error(ErrorKind::invalid_argument, "speed must be a positive number");
      speed_ = cmd.speed;
      break;
  }
  return state();
}

ReplayOutput run_replay(std::vector<PathSetup> paths, SessionOptions options, std::vector<TaggedPacket> workload) {
  options.record_egress = true;
  ReplaySession session(std::move(paths), std::move(options));
  session.add_workload(std::move(workload));
  ReplayOutput out;
  session.set_event_handler([&](const ApiEvent& e) { out.events.push_back(e); });
  session.control(ControlCommand{ControlKind::start});
  session.run_to_end();
  for (std::size_t i = 0; i < session.path_count(); ++i)
    out.paths.push_back(PathOutput{session.path_id(i), session.egress_log(i), session.reports(i)});
  return out;
}

}  // namespace routeemu

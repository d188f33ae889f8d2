#include "routeemu/json_io.hpp"

#include <cmath>

#include "routeemu/error.hpp"

namespace routeemu {

using nlohmann::json;

json to_json(const CorrectionParams& p) {
  return {{"b_th_bps", p.b_th_bps}, {"d_th_ms", p.d_th_ms}, {"t_th_ms", p.t_th_ms}, {"t_adj_ms", p.t_adj_ms}};
}

CorrectionParams correction_params_from_json(const json& j) {
  CorrectionParams p;
  if (j.is_null()) return p;
  if (!j.is_object()) throw Error(ErrorKind::invalid_argument, "correction params must be a JSON object");
  try {
    p.b_th_bps = j.value("b_th_bps", p.b_th_bps);
    p.d_th_ms = j.value("d_th_ms", p.d_th_ms);
    p.t_th_ms = j.value("t_th_ms", p.t_th_ms);
    p.t_adj_ms = j.value("t_adj_ms", p.t_adj_ms);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::invalid_argument, e.what());
  }
  return p;
}

json to_json(const CorrectionInterval& i) {
  return {{"start_ms", i.start_ms},
          {"end_ms", i.end_ms},
          {"replacement_delay_ms", i.replacement_delay_ms},
          {"replacement_jitter_ms", i.replacement_jitter_ms},
          {"window_sample_count", i.window_sample_count}};
}

json to_json(std::span<const CorrectionInterval> intervals) {
  json out = json::array();
  for (const auto& i : intervals) out.push_back(to_json(i));
  return out;
}

std::vector<CorrectionInterval> intervals_from_json(const json& j) {
  std::vector<CorrectionInterval> out;
  try {
    for (const auto& e : j) {
      out.push_back(CorrectionInterval{e.at("start_ms").get<TimeMs>(), e.at("end_ms").get<TimeMs>(),
                                       e.at("replacement_delay_ms").get<double>(),
                                       e.at("replacement_jitter_ms").get<double>(),
                                       e.at("window_sample_count").get<std::size_t>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::malformed_row, std::string("intervals: ") + e.what());
  }
  return out;
}

json to_json(const LinkParams& p) {
  // JSON has no infinity; an unlimited rate is null.
  json rate = std::isinf(p.rate_bps) ? json(nullptr) : json(p.rate_bps);
  return {{"rate_bps", rate}, {"base_delay_ms", p.base_delay_ms}, {"jitter_ms", p.jitter_ms}, {"loss_rate", p.loss_rate}};
}

json to_json(const ProbeReport& r) {
  return {{"t_ms", r.t_ms},
          {"throughput_bps", r.throughput_bps},
          {"mean_delay_ms", r.mean_delay_ms},
          {"jitter_ms", r.jitter_ms},
          {"loss_rate", r.loss_rate},
          {"packets_received", r.packets_received},
          {"packets_expected", r.packets_expected},
          {"delay_offset_uncorrected", r.delay_offset_uncorrected}};
}

json to_json(const ReplayState& s) {
  json paths = json::array();
  for (const auto& p : s.paths) {
    json entry = to_json(p.params);
    entry["path_id"] = p.path_id;
    paths.push_back(std::move(entry));
  }
  return {{"status", to_string(s.status)},
          {"t_ms", s.t_ms},
          {"speed", s.speed},
          {"variant", s.variant == ScenarioVariant::corrected ? "corrected" : "raw"},
          {"position", {{"lat_deg", s.lat_deg}, {"lon_deg", s.lon_deg}}},
          {"paths", std::move(paths)}};
}

json to_json(const ApiEvent& e) {
  json payload = std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PositionSample>) {
          return {{"t_ms", v.t_ms}, {"lat_deg", v.lat_deg}, {"lon_deg", v.lon_deg}};
        } else if constexpr (std::is_same_v<T, ReplayStatus>) {
          return {{"status", to_string(v)}};
        } else {
          return to_json(v);
        }
      },
      e.payload);
  json out = {{"t_ms", e.t_ms}, {"kind", to_string(e.kind)}, {"payload", std::move(payload)}};
  if (!e.path_id.empty()) out["path_id"] = e.path_id;
  return out;
}

json to_json(const ComparisonResult& r) {
  json rows = json::array();
  for (const auto& row : r.joined.rows) {
    json entry = {{"t_ms", row.t_ms}};
    static constexpr const char* kNames[] = {"field", "raw", "corrected"};
    for (std::size_t i = 0; i < row.values.size() && i < 3; ++i)
      entry[kNames[i]] = {{"throughput_bps", row.values[i].throughput_bps},
                          {"mean_delay_ms", row.values[i].mean_delay_ms}};
    rows.push_back(std::move(entry));
  }
  auto err = [](const SeriesError& e) { return json{{"mae", e.mae}, {"rmse", e.rmse}}; };
  return {{"congestion_window", {{"start_ms", r.congestion_window.start_ms}, {"end_ms", r.congestion_window.end_ms}}},
          {"mae_delay_raw_ms", r.mae_delay_raw_ms},
          {"mae_delay_corrected_ms", r.mae_delay_corrected_ms},
          {"rmse_delay_raw_ms", r.rmse_delay_raw_ms},
          {"rmse_delay_corrected_ms", r.rmse_delay_corrected_ms},
          {"mae_throughput_raw_bps", r.mae_throughput_raw_bps},
          {"mae_throughput_corrected_bps", r.mae_throughput_corrected_bps},
          {"full_span",
           {{"delay_raw_ms", err(r.delay_raw_full)},
            {"delay_corrected_ms", err(r.delay_corrected_full)},
            {"throughput_raw_bps", err(r.throughput_raw_full)},
            {"throughput_corrected_bps", err(r.throughput_corrected_full)}}},
          {"corrected_tracks_better", r.corrected_tracks_better},
          {"tie", r.tie},
          {"gaps", r.joined.gaps},
          {"rows", std::move(rows)}};
}

ControlCommand control_command_from_json(const json& j) {
  if (!j.is_object() || !j.contains("cmd") || !j.at("cmd").is_string())
    throw Error(ErrorKind::invalid_argument, "body must be an object with a string 'cmd'");
  const auto cmd = j.at("cmd").get<std::string>();
  ControlCommand c;
  try {
    if (cmd == "start") {
      c.kind = ControlKind::start;
      const auto variant = j.value("variant", std::string("raw"));
      if (variant != "raw" && variant != "corrected")
        throw Error(ErrorKind::invalid_argument, "variant must be raw or corrected");
      c.variant = variant == "corrected" ? ScenarioVariant::corrected : ScenarioVariant::raw;
    } else if (cmd == "pause") {
      c.kind = ControlKind::pause;
    } else if (cmd == "resume") {
      c.kind = ControlKind::resume;
    } else if (cmd == "seek") {
      c.kind = ControlKind::seek;
      c.t_ms = j.at("t_ms").get<TimeMs>();
    } else if (cmd == "set_speed") {
      c.kind = ControlKind::set_speed;
      c.speed = j.at("speed").get<double>();
    } else {
      throw Error(ErrorKind::invalid_argument, "unknown cmd '" + cmd + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::invalid_argument, e.what());
  }
  return c;
}

}  // namespace routeemu

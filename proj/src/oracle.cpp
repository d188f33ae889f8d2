#include "routeemu/oracle.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>

#include "routeemu/ingest.hpp"
#include "routeemu/json_io.hpp"
#include "routeemu/scenario_pipeline.hpp"

namespace routeemu {

std::vector<NetSample> synthetic_dip_trace(const DipSpec& spec) {
  std::vector<NetSample> out;
  for (TimeMs t = 0; t < spec.duration_ms; t += spec.delta_ms) {
    const bool dip = t >= spec.dip_start_ms && t < spec.dip_start_ms + spec.dip_length_ms;
    out.push_back(dip ? NetSample{t, spec.dip_bps, spec.dip_delay_ms, spec.dip_jitter_ms, 0.0}
                      : NetSample{t, spec.base_bps, spec.base_delay_ms, spec.base_jitter_ms, 0.0});
  }
  return out;
}

std::vector<PositionSample> synthetic_route(TimeMs duration_ms) {
  // Urban loop: 9 m/s, turning 90 degrees every two minutes.
  constexpr double kLat0 = 35.681236;
  constexpr double kLon0 = 139.767125;
  constexpr double kSpeed = 9.0;
  constexpr double kMetersPerDegLat = 111'320.0;
  const double meters_per_deg_lon = kMetersPerDegLat * std::cos(kLat0 * std::numbers::pi / 180.0);

  std::vector<PositionSample> out;
  double north = 0.0;
  double east = 0.0;
  const TimeMs last = (duration_ms + 999) / 1000 * 1000;
  for (TimeMs t = 0; t <= last; t += 1000) {
    const double lat = std::round((kLat0 + north / kMetersPerDegLat) * 1e6) / 1e6;
    const double lon = std::round((kLon0 + east / meters_per_deg_lon) * 1e6) / 1e6;
    out.push_back({t, lat, lon});
    const double heading = static_cast<double>((t / 120'000) % 4) * std::numbers::pi / 2.0;
    north += kSpeed * std::cos(heading);
    east += kSpeed * std::sin(heading);
  }
  return out;
}

Scenario synthetic_dip_scenario(const DipSpec& spec, std::string path_id) {
  return align(synthetic_route(spec.duration_ms), synthetic_dip_trace(spec), std::move(path_id));
}

std::vector<ProbeReport> probe_scenario(const Scenario& s, const ProbeConfig& probe, const LinkConfig& link) {
  SessionOptions options;
  options.probe = probe;
  auto out = run_replay({PathSetup{s.path_id, s, link}}, options);
  return std::move(out.paths.front().reports);
}

OracleResult run_oracle(const OracleConfig& cfg) {
  OracleResult r;
  DipSpec truth;
  truth.duration_ms = cfg.duration_ms;
  truth.base_bps = cfg.capacity_bps;
  truth.base_delay_ms = cfg.propagation_ms;
  truth.base_jitter_ms = 0.0;
  truth.dip_start_ms = cfg.dip_start_ms;
  truth.dip_length_ms = cfg.dip_length_ms;
  truth.dip_bps = cfg.dip_capacity_bps;
  truth.dip_delay_ms = cfg.propagation_ms;
  truth.dip_jitter_ms = 0.0;

  const auto route = synthetic_route(cfg.duration_ms);
  r.ground_truth = align(route, synthetic_dip_trace(truth), "ground_truth");

  ProbeConfig probe = cfg.probe;
  probe.duration_ms = cfg.duration_ms;
  LinkConfig link;
  link.rng_seed = cfg.seed;

  r.field = probe_scenario(r.ground_truth, probe, link);
  r.raw = align(route, net_samples_from_reports(r.field), "replay");
  auto corrected = correct_delay(r.raw, cfg.correction);
  r.corrected = std::move(corrected.scenario);
  r.intervals = std::move(corrected.intervals);

  r.raw_replay = probe_scenario(r.raw, probe, link);
  r.corrected_replay = probe_scenario(r.corrected, probe, link);
  // Score what gets written, so re-running compare on the CSVs reproduces the verdict.
  auto as_written = [](const std::vector<ProbeReport>& v) { return read_probe_csv(write_probe_csv(v)); };
  r.comparison = compare(as_written(r.field), as_written(r.raw_replay), as_written(r.corrected_replay),
                         congestion_window(r.intervals));
  return r;
}

void write_oracle_outputs(const OracleResult& result, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path base(dir);
  write_file((base / "ground_truth_scenario.csv").string(), write_scenario_csv(result.ground_truth));
  write_file((base / "field_reports.csv").string(), write_probe_csv(result.field));
  write_file((base / "raw_scenario.csv").string(), write_scenario_csv(result.raw));
  write_file((base / "corrected_scenario.csv").string(), write_scenario_csv(result.corrected));
  write_file((base / "intervals.json").string(), to_json(result.intervals).dump(2) + "\n");
  write_file((base / "raw_replay_reports.csv").string(), write_probe_csv(result.raw_replay));
  write_file((base / "corrected_replay_reports.csv").string(), write_probe_csv(result.corrected_replay));
  write_file((base / "comparison.json").string(), to_json(result.comparison).dump(2) + "\n");
  write_file((base / "plot.csv").string(), export_plot_data(result.comparison));
}

}  // namespace routeemu

#pragma once

#include <string>
#include <vector>

#include "routeemu/orchestrator.hpp"
#include "routeemu/probe.hpp"
#include "routeemu/report.hpp"
#include "routeemu/trace_model.hpp"

namespace routeemu {

/// Synthetic net trace: constant baseline with one rectangular dip.
struct DipSpec {
  TimeMs duration_ms = 60'000;
  TimeMs delta_ms = 50;
  std::int64_t base_bps = 5'000'000;
  double base_delay_ms = 30.0;
  double base_jitter_ms = 2.0;
  TimeMs dip_start_ms = 10'000;
  TimeMs dip_length_ms = 2000;
  std::int64_t dip_bps = 500'000;
  double dip_delay_ms = 120.0;
  double dip_jitter_ms = 8.0;
};

std::vector<NetSample> synthetic_dip_trace(const DipSpec& spec);

/// 1 Hz position trace along a fixed urban-style route.
std::vector<PositionSample> synthetic_route(TimeMs duration_ms);

Scenario synthetic_dip_scenario(const DipSpec& spec, std::string path_id = "lte0");

struct OracleConfig {
  TimeMs duration_ms = 30'000;
  TimeMs dip_start_ms = 10'000;
  TimeMs dip_length_ms = 2000;
  std::int64_t capacity_bps = 5'000'000;
  std::int64_t dip_capacity_bps = 500'000;
  double propagation_ms = 30.0;
  ProbeConfig probe;
  CorrectionParams correction;
  std::uint64_t seed = 1;
};

struct OracleResult {
  Scenario ground_truth;
  std::vector<ProbeReport> field;
  Scenario raw;
  Scenario corrected;
  std::vector<CorrectionInterval> intervals;
  std::vector<ProbeReport> raw_replay;
  std::vector<ProbeReport> corrected_replay;
  ComparisonResult comparison;
};

/// Ground-truth pipeline: a capacity-dip link measured by the probe gives the
/// "field" reports; those reports become the raw scenario, which is replayed
/// as-is and after delay correction, and both replays are compared to the field.
OracleResult run_oracle(const OracleConfig& cfg);

/// Writes every oracle artifact (CSV/JSON) into `dir`.
void write_oracle_outputs(const OracleResult& result, const std::string& dir);

/// Probe run over one scenario on the virtual clock.
std::vector<ProbeReport> probe_scenario(const Scenario& s, const ProbeConfig& probe,
                                        const LinkConfig& link = {});

}  // namespace routeemu

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace routeemu {

/// Milliseconds relative to the scenario epoch (the first sample of a trace).
using TimeMs = std::int64_t;

inline constexpr TimeMs kDefaultGridMs = 50;

struct PositionSample {
  TimeMs t_ms = 0;
  double lat_deg = 0.0;
  double lon_deg = 0.0;

  friend bool operator==(const PositionSample&, const PositionSample&) = default;
};

struct NetSample {
  TimeMs t_ms = 0;
  std::int64_t throughput_bps = 0;
  double delay_ms = 0.0;
  double jitter_ms = 0.0;
  double loss_rate = 0.0;

  friend bool operator==(const NetSample&, const NetSample&) = default;
};

struct ScenarioRow {
  TimeMs t_ms = 0;
  double lat_deg = 0.0;
  double lon_deg = 0.0;
  std::int64_t throughput_bps = 0;
  double delay_ms = 0.0;
  double jitter_ms = 0.0;
  double loss_rate = 0.0;
  bool corrected = false;

  friend bool operator==(const ScenarioRow&, const ScenarioRow&) = default;
};

/// Time-aligned replay input for one cellular path on a uniform grid.
struct Scenario {
  std::string path_id;
  TimeMs delta_ms = kDefaultGridMs;
  std::vector<ScenarioRow> rows;

  TimeMs start_ms() const { return rows.empty() ? 0 : rows.front().t_ms; }
  TimeMs last_ms() const { return rows.empty() ? 0 : rows.back().t_ms; }
  /// Exclusive end of the timeline: the last row holds for one grid step.
  TimeMs end_ms() const { return last_ms() + delta_ms; }

  /// Index of the row governing time t (zero-order hold), clamped to the span.
  std::size_t row_index_at(TimeMs t) const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct CorrectionParams {
  double b_th_bps = 700'000.0;
  double d_th_ms = 50.0;
  TimeMs t_th_ms = 250;
  TimeMs t_adj_ms = 1000;

  friend bool operator==(const CorrectionParams&, const CorrectionParams&) = default;
};

struct CorrectionInterval {
  TimeMs start_ms = 0;
  TimeMs end_ms = 0;
  double replacement_delay_ms = 0.0;
  double replacement_jitter_ms = 0.0;
  std::size_t window_sample_count = 0;

  friend bool operator==(const CorrectionInterval&, const CorrectionInterval&) = default;
};

struct Violation {
  std::size_t row = 0;
  std::string field;
  std::string message;
};

/// Checks every type invariant. Violations are data: an empty list means valid.
std::vector<Violation> validate_scenario(const Scenario& s);

std::string describe(const Violation& v);

}  // namespace routeemu

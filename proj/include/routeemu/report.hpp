#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "routeemu/probe.hpp"

namespace routeemu {

struct JoinedRow {
  TimeMs t_ms = 0;
  std::vector<ProbeReport> values;  // one per input series, in argument order
};

struct JoinedTable {
  std::vector<JoinedRow> rows;
  std::vector<TimeMs> gaps;  // timestamps missing from at least one series
};

/// Inner join on t_ms. Series with different report spacing throw
/// Error(interval_mismatch).
JoinedTable join_reports(std::span<const std::vector<ProbeReport>> series);

struct TimeWindow {
  TimeMs start_ms = 0;
  TimeMs end_ms = 0;  // inclusive

  bool contains(TimeMs t) const { return t >= start_ms && t <= end_ms; }
};

/// Union of the intervals dilated by `tail_ms` after the last one.
std::optional<TimeWindow> congestion_window(std::span<const CorrectionInterval> intervals,
                                            TimeMs tail_ms = 2000);

struct SeriesError {
  double mae = 0.0;
  double rmse = 0.0;
};

struct ComparisonResult {
  JoinedTable joined;  // values ordered field, raw, corrected
  TimeWindow congestion_window;
  SeriesError delay_raw_full;
  SeriesError delay_corrected_full;
  SeriesError throughput_raw_full;
  SeriesError throughput_corrected_full;
  double mae_delay_raw_ms = 0.0;        // over the congestion window
  double mae_delay_corrected_ms = 0.0;  // over the congestion window
  double mae_throughput_raw_bps = 0.0;
  double mae_throughput_corrected_bps = 0.0;
  double rmse_delay_raw_ms = 0.0;
  double rmse_delay_corrected_ms = 0.0;
  bool corrected_tracks_better = false;
  bool tie = false;
};

double mean_absolute_error(std::span<const double> a, std::span<const double> b);
double root_mean_square_error(std::span<const double> a, std::span<const double> b);

/// Field vs raw-replay vs corrected-replay. Without a window, the full span is used.
ComparisonResult compare(const std::vector<ProbeReport>& field,
                         const std::vector<ProbeReport>& raw_replay,
                         const std::vector<ProbeReport>& corrected_replay,
                         std::optional<TimeWindow> window = std::nullopt);

/// Long-format `ts_ms,series,metric,value` rows for plotting.
std::string export_plot_data(const ComparisonResult& result);

struct PlotPoint {
  TimeMs t_ms = 0;
  std::string series;
  std::string metric;
  double value = 0.0;
};

std::vector<PlotPoint> parse_plot_data(std::string_view csv);

}  // namespace routeemu

#pragma once

#include <span>
#include <vector>

#include "routeemu/trace_model.hpp"

namespace routeemu {

/// Fuses a net trace with linearly interpolated positions, one row per net sample.
/// Positions outside the position-trace span are clamped to the nearest endpoint.
Scenario align(std::span<const PositionSample> positions, std::span<const NetSample> net,
               std::string path_id = "path0");

/// False when every net sample lies outside the position span (all rows clamped).
bool positions_overlap(std::span<const PositionSample> positions, std::span<const NetSample> net);

struct CorrectionResult {
  Scenario scenario;
  std::vector<CorrectionInterval> intervals;
};

/// Congestion-induced delay correction.
///
/// A sample is flagged when throughput < b_th and delay > d_th. Maximal flagged
/// runs lasting at least t_th become intervals; their delay and jitter are
/// replaced by the mean over the t_adj windows before and after the run,
/// excluding samples that belong to any interval. Throughput and loss are never
/// touched.
CorrectionResult correct_delay(const Scenario& s, const CorrectionParams& p = {});

}  // namespace routeemu

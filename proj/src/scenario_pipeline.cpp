#include "routeemu/scenario_pipeline.hpp"

#include <algorithm>

#include "routeemu/error.hpp"

namespace routeemu {

namespace {

std::pair<double, double> position_at(std::span<const PositionSample> positions, TimeMs t) {
  if (t <= positions.front().t_ms) return {positions.front().lat_deg, positions.front().lon_deg};
  if (t >= positions.back().t_ms) return {positions.back().lat_deg, positions.back().lon_deg};
  // First sample strictly after t; its predecessor brackets t from below.
  const auto upper = std::upper_bound(positions.begin(), positions.end(), t,
                                      [](TimeMs v, const PositionSample& p) { return v < p.t_ms; });
  const auto& lo = *(upper - 1);
  const auto& hi = *upper;
  if (lo.t_ms == t) return {lo.lat_deg, lo.lon_deg};
  const double alpha = static_cast<double>(t - lo.t_ms) / static_cast<double>(hi.t_ms - lo.t_ms);
  return {lo.lat_deg + alpha * (hi.lat_deg - lo.lat_deg), lo.lon_deg + alpha * (hi.lon_deg - lo.lon_deg)};
}

}  // namespace

Scenario align(std::span<const PositionSample> positions, std::span<const NetSample> net,
               std::string path_id) {
  if (positions.empty() || net.empty())
    throw Error(ErrorKind::empty_input, positions.empty() ? "no position samples" : "no net samples");

  Scenario s;
  s.path_id = std::move(path_id);
  s.delta_ms = net.size() >= 2 ? net[1].t_ms - net[0].t_ms : kDefaultGridMs;
  s.rows.reserve(net.size());
  for (const auto& n : net) {
    const auto [lat, lon] = position_at(positions, n.t_ms);
    s.rows.push_back(ScenarioRow{n.t_ms, lat, lon, n.throughput_bps, n.delay_ms, n.jitter_ms,
                                 n.loss_rate, false});
  }
  return s;
}

bool positions_overlap(std::span<const PositionSample> positions, std::span<const NetSample> net) {
  if (positions.empty() || net.empty()) return false;
  return net.back().t_ms >= positions.front().t_ms && net.front().t_ms <= positions.back().t_ms;
}

CorrectionResult correct_delay(const Scenario& s, const CorrectionParams& p) {
  if (s.delta_ms <= 0) throw Error(ErrorKind::grid_mismatch, "scenario grid spacing must be positive");
  if (p.b_th_bps <= 0.0 || p.d_th_ms <= 0.0 || p.t_th_ms <= 0 || p.t_adj_ms <= 0)
    throw Error(ErrorKind::invalid_argument, "correction thresholds must be strictly positive");
  if (p.t_th_ms % s.delta_ms != 0 || p.t_adj_ms % s.delta_ms != 0)
    throw Error(ErrorKind::grid_mismatch,
                "t_th (" + std::to_string(p.t_th_ms) + " ms) and t_adj (" + std::to_string(p.t_adj_ms) +
                    " ms) must be multiples of the " + std::to_string(s.delta_ms) + " ms grid");

  const auto& rows = s.rows;
  const std::size_t n = rows.size();
  std::vector<bool> flagged(n);
  for (std::size_t k = 0; k < n; ++k)
    flagged[k] = static_cast<double>(rows[k].throughput_bps) < p.b_th_bps && rows[k].delay_ms > p.d_th_ms;

  struct Run {
    std::size_t first, last;
  };
  std::vector<Run> runs;
  std::vector<bool> in_interval(n);
  for (std::size_t k = 0; k < n;) {
    if (!flagged[k]) {
      ++k;
      continue;
    }
    std::size_t end = k;
    while (end + 1 < n && flagged[end + 1]) ++end;
    const auto duration = static_cast<TimeMs>(end - k + 1) * s.delta_ms;
    if (duration >= p.t_th_ms) {
      runs.push_back({k, end});
      for (std::size_t j = k; j <= end; ++j) in_interval[j] = true;
    }
    k = end + 1;
  }

  CorrectionResult result{s, {}};
  const auto window = static_cast<std::size_t>(p.t_adj_ms / s.delta_ms);
  for (const auto& run : runs) {
    double delay_sum = 0.0;
    double jitter_sum = 0.0;
    std::size_t count = 0;
    auto take = [&](std::size_t j) {
      if (in_interval[j]) return;
      delay_sum += rows[j].delay_ms;
      jitter_sum += rows[j].jitter_ms;
      ++count;
    };
    for (std::size_t j = run.first >= window ? run.first - window : 0; j < run.first; ++j) take(j);
    for (std::size_t j = run.last + 1; j <= std::min(n - 1, run.last + window); ++j) take(j);

    CorrectionInterval interval{rows[run.first].t_ms, rows[run.last].t_ms, 0.0, 0.0, count};
    if (count > 0) {
      interval.replacement_delay_ms = delay_sum / static_cast<double>(count);
      interval.replacement_jitter_ms = jitter_sum / static_cast<double>(count);
      for (std::size_t j = run.first; j <= run.last; ++j) {
        auto& row = result.scenario.rows[j];
        row.delay_ms = interval.replacement_delay_ms;
        row.jitter_ms = interval.replacement_jitter_ms;
        row.corrected = true;
      }
    }
    result.intervals.push_back(interval);
  }
  return result;
}

}  // namespace routeemu

#include "routeemu/trace_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace routeemu {

std::size_t Scenario::row_index_at(TimeMs t) const {
  if (rows.empty() || t <= start_ms()) return 0;
  auto idx = static_cast<std::size_t>((t - start_ms()) / delta_ms);
  return std::min(idx, rows.size() - 1);
}

namespace {

void add(std::vector<Violation>& out, std::size_t row, std::string field, std::string msg) {
  out.push_back({row, std::move(field), std::move(msg)});
}

}  // namespace

std::vector<Violation> validate_scenario(const Scenario& s) {
  std::vector<Violation> out;
  if (s.delta_ms <= 0) add(out, 0, "delta_ms", "grid spacing must be positive");
  if (s.rows.empty()) {
    add(out, 0, "rows", "scenario has no rows");
    return out;
  }
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    const auto& r = s.rows[i];
    if (!std::isfinite(r.lat_deg) || r.lat_deg < -90.0 || r.lat_deg > 90.0)
      add(out, i, "lat_deg", "latitude outside [-90, 90]");
    if (!std::isfinite(r.lon_deg) || r.lon_deg < -180.0 || r.lon_deg > 180.0)
      add(out, i, "lon_deg", "longitude outside [-180, 180]");
    if (r.throughput_bps < 0) add(out, i, "throughput_bps", "negative throughput");
    if (!std::isfinite(r.delay_ms) || r.delay_ms < 0.0)
      add(out, i, "delay_ms", "delay must be finite and non-negative");
    if (!std::isfinite(r.jitter_ms) || r.jitter_ms < 0.0)
      add(out, i, "jitter_ms", "jitter must be finite and non-negative");
    if (!std::isfinite(r.loss_rate) || r.loss_rate < 0.0 || r.loss_rate > 1.0)
      add(out, i, "loss_rate", "loss_rate outside [0, 1]");
    if (i > 0 && s.delta_ms > 0) {
      const TimeMs gap = r.t_ms - s.rows[i - 1].t_ms;
      if (gap != s.delta_ms) {
        add(out, i, "t_ms",
            "non-uniform grid: gap " + std::to_string(gap) + " ms, expected " +
                std::to_string(s.delta_ms) + " ms");
      }
    }
  }
  return out;
}

std::string describe(const Violation& v) {
  std::ostringstream os;
  os << "row " << v.row << ", " << v.field << ": " << v.message;
  return os.str();
}

}  // namespace routeemu

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <algorithm>
#include <unistd.h>
#include <string>

#include "routeemu/trace_model.hpp"

namespace testsupport {

using routeemu::Scenario;
using routeemu::ScenarioRow;
using routeemu::TimeMs;

// Small wrapper so generators read like prose.
struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}

  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
  }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  bool chance(double p) { return real(0.0, 1.0) < p; }
  // Value on a decimal grid, e.g. quantized(0, 200, 3) has 3 decimals.
  double quantized(double lo, double hi, int decimals) {
    const double scale = std::pow(10.0, decimals);
    return static_cast<double>(integer(static_cast<std::int64_t>(std::ceil(lo * scale)),
                                       static_cast<std::int64_t>(std::floor(hi * scale)))) /
           scale;
  }
};

inline Scenario constant_scenario(TimeMs duration_ms, std::int64_t bps, double delay_ms, double jitter_ms = 0.0,
                                  double loss = 0.0, std::string path_id = "lte0", TimeMs delta = 50) {
  Scenario s;
  s.path_id = std::move(path_id);
  s.delta_ms = delta;
  for (TimeMs t = 0; t < duration_ms; t += delta)
    s.rows.push_back(ScenarioRow{t, 35.0, 139.0, bps, delay_ms, jitter_ms, loss, false});
  return s;
}

// 5 Mbps / 30 ms / 2 ms baseline with a rectangular 0.5 Mbps / 120 ms / 8 ms dip.
inline Scenario dip_scenario(TimeMs duration_ms, TimeMs dip_start, TimeMs dip_len) {
  Scenario s = constant_scenario(duration_ms, 5'000'000, 30.0, 2.0);
  for (auto& r : s.rows) {
    if (r.t_ms >= dip_start && r.t_ms < dip_start + dip_len) {
      r.throughput_bps = 500'000;
      r.delay_ms = 120.0;
      r.jitter_ms = 8.0;
    }
  }
  return s;
}

// Valid scenario whose values sit exactly on the CSV precision grid.
inline Scenario random_scenario(Gen& g, std::size_t rows, TimeMs delta = 50) {
  Scenario s;
  s.path_id = "p" + std::to_string(g.integer(0, 99));
  s.delta_ms = delta;
  const TimeMs start = g.integer(0, 1000) * delta;
  double lat = g.quantized(-80, 80, 6), lon = g.quantized(-179, 179, 6);
  for (std::size_t i = 0; i < rows; ++i) {
    ScenarioRow r;
    r.t_ms = start + static_cast<TimeMs>(i) * delta;
    lat = std::clamp(lat + g.quantized(-0.001, 0.001, 6), -90.0, 90.0);
    lon = std::clamp(lon + g.quantized(-0.001, 0.001, 6), -180.0, 180.0);
    r.lat_deg = std::round(lat * 1e6) / 1e6;
    r.lon_deg = std::round(lon * 1e6) / 1e6;
    r.throughput_bps = g.chance(0.3) ? g.integer(0, 100'000) * 1000 : g.integer(0, 100'000'000);
    r.delay_ms = g.quantized(0, 500, 3);
    r.jitter_ms = g.quantized(0, 50, 3);
    r.loss_rate = g.chance(0.5) ? 0.0 : g.quantized(0, 1, 6);
    r.corrected = g.chance(0.2);
    s.rows.push_back(r);
  }
  return s;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("routeemu_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string data_file(const std::string& name) { return std::string(ROUTEEMU_TEST_DATA) + "/" + name; }

}  // namespace testsupport

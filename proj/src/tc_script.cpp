#include "routeemu/tc_script.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "routeemu/ingest.hpp"

namespace routeemu {

namespace {

std::string rate_kbit(std::int64_t bps) {
  // tbf rejects a zero rate; a blocked path is approximated by the minimum.
  return format_kbps(std::max<std::int64_t>(bps, 1000)) + "kbit";
}

std::string shaper_line(std::string_view verb, std::string_view dev, const ScenarioRow& row, const LinkConfig& link) {
  const double rate = static_cast<double>(std::max<std::int64_t>(row.throughput_bps, 1000));
  const auto burst = static_cast<long long>(std::llround(link.effective_bucket_depth(rate)));
  char buf[256];
  std::snprintf(buf, sizeof buf, "tc qdisc %.*s dev %.*s root handle 1: tbf rate %s burst %lld latency 500ms\n",
                static_cast<int>(verb.size()), verb.data(), static_cast<int>(dev.size()), dev.data(),
                rate_kbit(row.throughput_bps).c_str(), burst);
  return buf;
}

std::string netem_line(std::string_view verb, std::string_view dev, const ScenarioRow& row) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "tc qdisc %.*s dev %.*s parent 1:1 handle 10: netem delay %.3fms %.3fms loss %.4f%%\n",
                static_cast<int>(verb.size()), verb.data(), static_cast<int>(dev.size()), dev.data(), row.delay_ms,
                row.jitter_ms, row.loss_rate * 100.0);
  return buf;
}

}  // namespace

std::string emit_tc_script(const Scenario& s, std::string_view interface_name, const LinkConfig& link) {
  std::string out;
  out += "#!/bin/sh\n";
  out += "# replay of path " + s.path_id + " on " + std::string(interface_name) + ": " +
         std::to_string(s.rows.size()) + " rows, " + std::to_string(s.delta_ms) + " ms grid\n";
  out += "# layout: tbf rate shaper at root (1:), netem delay/jitter/loss below it (10:)\n";
  out += "set -e\n";
  char sleep_line[64];
  std::snprintf(sleep_line, sizeof sleep_line, "sleep %.3f\n", static_cast<double>(s.delta_ms) / 1000.0);
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    const auto& row = s.rows[i];
    if (i == 0) {
      out += shaper_line("replace", interface_name, row, link);
      out += netem_line("replace", interface_name, row);
      continue;
    }
    out += sleep_line;
    out += shaper_line("change", interface_name, row, link);
    out += netem_line("change", interface_name, row);
  }
  return out;
}

}  // namespace routeemu

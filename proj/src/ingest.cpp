#include "routeemu/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

namespace routeemu {

namespace {

constexpr std::string_view kPositionHeader = "ts_ms,lat,lon";
constexpr std::string_view kNetHeader = "ts_ms,throughput_kbps,delay_ms,jitter_ms,loss_rate";
constexpr std::string_view kScenarioColumns[] = {"ts_ms",    "lat",       "lon",       "throughput_kbps",
                                                 "delay_ms", "jitter_ms", "loss_rate", "corrected"};

struct Line {
  std::size_t number;
  std::string_view text;
};

struct CsvBody {
  std::optional<Line> header;
  std::vector<Line> data;
  std::vector<Line> comments;
};

CsvBody split_csv(std::string_view text) {
  CsvBody body;
  std::size_t number = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++number;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.front() == '#') {
      body.comments.push_back({number, line});
      continue;
    }
    if (!body.header) {
      body.header = Line{number, line};
    } else {
      body.data.push_back({number, line});
    }
  }
  return body;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = line.find(',');
    auto field = line.substr(0, comma);
    while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
    while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
    out.push_back(field);
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
  return out;
}

bool parse_int(std::string_view s, std::int64_t& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && !s.empty();
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && !s.empty();
}

std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

// Sorts by timestamp (stable) and moves repeated timestamps into issues.
template <typename Sample>
void sort_and_dedupe(std::vector<std::pair<std::size_t, Sample>>& rows, TraceScan<Sample>& scan) {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.second.t_ms < b.second.t_ms; });
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && rows[i].second.t_ms == rows[i - 1].second.t_ms) {
      scan.issues.push_back({ErrorKind::duplicate_timestamp, rows[i].first,
                             "duplicate timestamp " + std::to_string(rows[i].second.t_ms)});
      continue;
    }
    scan.samples.push_back(rows[i].second);
  }
}

template <typename Sample>
std::optional<TraceScan<Sample>> check_header(const CsvBody& body, std::string_view expected) {
  TraceScan<Sample> scan;
  scan.data_lines = body.data.size();
  if (!body.header) {
    scan.trace_issues.push_back({ErrorKind::empty_trace, 0, "no header and no data rows"});
    return scan;
  }
  if (body.header->text != expected) {
    scan.trace_issues.push_back({ErrorKind::malformed_row, body.header->number,
                                 "expected header '" + std::string(expected) + "'"});
    return scan;
  }
  return std::nullopt;
}

template <typename Sample>
void finish_empty(TraceScan<Sample>& scan) {
  if (scan.samples.empty() && scan.issues.empty())
    scan.trace_issues.push_back({ErrorKind::empty_trace, 0, "trace has no data rows"});
}

}  // namespace

TraceScan<PositionSample> scan_position_csv(std::string_view text) {
  const CsvBody body = split_csv(text);
  if (auto early = check_header<PositionSample>(body, kPositionHeader)) return *early;

  TraceScan<PositionSample> scan;
  scan.data_lines = body.data.size();
  std::vector<std::pair<std::size_t, PositionSample>> rows;
  for (const auto& line : body.data) {
    const auto f = split_fields(line.text);
    PositionSample p;
    if (f.size() != 3 || !parse_int(f[0], p.t_ms) || !parse_double(f[1], p.lat_deg) ||
        !parse_double(f[2], p.lon_deg)) {
      scan.issues.push_back({ErrorKind::malformed_row, line.number, "expected ts_ms,lat,lon"});
      continue;
    }
    if (!std::isfinite(p.lat_deg) || std::abs(p.lat_deg) > 90.0 || !std::isfinite(p.lon_deg) ||
        std::abs(p.lon_deg) > 180.0) {
      scan.issues.push_back({ErrorKind::range_violation, line.number, "coordinate out of range"});
      continue;
    }
    rows.emplace_back(line.number, p);
  }
  sort_and_dedupe(rows, scan);
  finish_empty(scan);
  return scan;
}

TraceScan<NetSample> scan_net_csv(std::string_view text) {
  const CsvBody body = split_csv(text);
  if (auto early = check_header<NetSample>(body, kNetHeader)) return *early;

  TraceScan<NetSample> scan;
  scan.data_lines = body.data.size();
  std::vector<std::pair<std::size_t, NetSample>> rows;
  for (const auto& line : body.data) {
    const auto f = split_fields(line.text);
    NetSample n;
    double kbps = 0.0;
    if (f.size() != 5 || !parse_int(f[0], n.t_ms) || !parse_double(f[1], kbps) ||
        !parse_double(f[2], n.delay_ms) || !parse_double(f[3], n.jitter_ms) ||
        !parse_double(f[4], n.loss_rate)) {
      scan.issues.push_back({ErrorKind::malformed_row, line.number,
                             "expected ts_ms,throughput_kbps,delay_ms,jitter_ms,loss_rate"});
      continue;
    }
    std::string reason;
    if (!std::isfinite(kbps) || kbps < 0.0) reason = "throughput_kbps must be non-negative";
    else if (!std::isfinite(n.delay_ms) || n.delay_ms < 0.0) reason = "delay_ms must be non-negative";
    else if (!std::isfinite(n.jitter_ms) || n.jitter_ms < 0.0) reason = "jitter_ms must be non-negative";
    else if (!std::isfinite(n.loss_rate) || n.loss_rate < 0.0 || n.loss_rate > 1.0)
      reason = "loss_rate outside [0, 1]";
    if (!reason.empty()) {
      scan.issues.push_back({ErrorKind::range_violation, line.number, reason});
      continue;
    }
    n.throughput_bps = std::llround(kbps * 1000.0);
    rows.emplace_back(line.number, n);
  }
  sort_and_dedupe(rows, scan);

  if (scan.samples.size() >= 2) {
    const TimeMs delta = scan.samples[1].t_ms - scan.samples[0].t_ms;
    for (std::size_t i = 2; i < scan.samples.size(); ++i) {
      const TimeMs gap = scan.samples[i].t_ms - scan.samples[i - 1].t_ms;
      if (gap != delta) {
        scan.trace_issues.push_back(
            {ErrorKind::non_uniform_grid, 0,
             "gap of " + std::to_string(gap) + " ms before ts_ms=" +
                 std::to_string(scan.samples[i].t_ms) + " (grid is " + std::to_string(delta) + " ms)"});
        break;
      }
    }
  }
  finish_empty(scan);
  return scan;
}

namespace {

std::string summarize(const std::vector<ParseIssue>& issues) {
  const auto& first = issues.front();
  std::string msg = first.line > 0 ? "line " + std::to_string(first.line) + ": " + first.reason
                                   : first.reason;
  if (issues.size() > 1) msg += " (+" + std::to_string(issues.size() - 1) + " more)";
  return msg;
}

template <typename Sample>
std::vector<Sample> strict(TraceScan<Sample> scan) {
  if (scan.ok()) return std::move(scan.samples);
  std::vector<ParseIssue> all = scan.trace_issues;
  all.insert(all.end(), scan.issues.begin(), scan.issues.end());
  // Row issues are more specific than a resulting empty trace.
  if (all.front().kind == ErrorKind::empty_trace && all.size() > 1) std::rotate(all.begin(), all.begin() + 1, all.end());
  throw ParseError(std::move(all));
}

}  // namespace

ParseError::ParseError(std::vector<ParseIssue> issues)
    : Error(issues.front().kind, summarize(issues)), issues_(std::move(issues)) {}

std::vector<PositionSample> parse_position_csv(std::string_view text) {
  return strict(scan_position_csv(text));
}

std::vector<NetSample> parse_net_csv(std::string_view text) { return strict(scan_net_csv(text)); }

std::string format_kbps(std::int64_t bps) {
  if (bps % 1000 == 0) return std::to_string(bps / 1000);
  const bool negative = bps < 0;
  const std::int64_t mag = negative ? -bps : bps;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%lld.%03lld", negative ? "-" : "",
                static_cast<long long>(mag / 1000), static_cast<long long>(mag % 1000));
  return buf;
}

std::int64_t parse_kbps(std::string_view field) {
  double kbps = 0.0;
  if (!parse_double(field, kbps) || !std::isfinite(kbps))
    throw Error(ErrorKind::malformed_row, "bad throughput_kbps '" + std::string(field) + "'");
  return std::llround(kbps * 1000.0);
}

std::string write_scenario_csv(const Scenario& s) {
  std::string out;
  out.reserve(64 * (s.rows.size() + 2));
  out += "# path_id=" + s.path_id + ",delta_ms=" + std::to_string(s.delta_ms) + "\n";
  out += "ts_ms,lat,lon,throughput_kbps,delay_ms,jitter_ms,loss_rate,corrected\n";
  for (const auto& r : s.rows) {
    out += std::to_string(r.t_ms);
    out += ',' + format_fixed(r.lat_deg, 6);
    out += ',' + format_fixed(r.lon_deg, 6);
    out += ',' + format_kbps(r.throughput_bps);
    out += ',' + format_fixed(r.delay_ms, 3);
    out += ',' + format_fixed(r.jitter_ms, 3);
    out += ',' + format_fixed(r.loss_rate, 6);
    out += r.corrected ? ",1\n" : ",0\n";
  }
  return out;
}

Scenario read_scenario_csv(std::string_view text, std::string path_id) {
  const CsvBody body = split_csv(text);
  Scenario s;
  std::optional<TimeMs> declared_delta;
  std::string declared_id;
  for (const auto& c : body.comments) {
    auto rest = c.text.substr(1);
    while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
    for (auto kv : split_fields(rest)) {
      const auto eq = kv.find('=');
      if (eq == std::string_view::npos) continue;
      const auto key = kv.substr(0, eq);
      const auto value = kv.substr(eq + 1);
      std::int64_t d = 0;
      if (key == "path_id") declared_id = std::string(value);
      if (key == "delta_ms" && parse_int(value, d)) declared_delta = d;
    }
  }
  if (!body.header) throw Error(ErrorKind::empty_trace, "scenario file has no header");

  const auto header = split_fields(body.header->text);
  for (std::size_t i = 0; i < std::size(kScenarioColumns); ++i) {
    if (std::find(header.begin(), header.end(), kScenarioColumns[i]) == header.end())
      throw Error(ErrorKind::grid_violation,
                  "missing column '" + std::string(kScenarioColumns[i]) + "'");
    if (i >= header.size() || header[i] != kScenarioColumns[i])
      throw Error(ErrorKind::grid_violation,
                  "column " + std::to_string(i + 1) + " must be '" + std::string(kScenarioColumns[i]) + "'");
  }
  if (header.size() != std::size(kScenarioColumns))
    throw Error(ErrorKind::grid_violation, "unexpected extra columns");

  for (const auto& line : body.data) {
    const auto f = split_fields(line.text);
    ScenarioRow r;
    std::int64_t corrected = 0;
    double kbps = 0.0;
    if (f.size() != 8 || !parse_int(f[0], r.t_ms) || !parse_double(f[1], r.lat_deg) ||
        !parse_double(f[2], r.lon_deg) || !parse_double(f[3], kbps) ||
        !parse_double(f[4], r.delay_ms) || !parse_double(f[5], r.jitter_ms) ||
        !parse_double(f[6], r.loss_rate) || !parse_int(f[7], corrected) ||
        (corrected != 0 && corrected != 1)) {
      throw Error(ErrorKind::malformed_row, "line " + std::to_string(line.number) + ": malformed scenario row");
    }
    r.throughput_bps = parse_kbps(f[3]);
    r.corrected = corrected == 1;
    s.rows.push_back(r);
  }
  if (s.rows.empty()) throw Error(ErrorKind::empty_trace, "scenario file has no rows");

  s.path_id = !path_id.empty() ? std::move(path_id) : !declared_id.empty() ? declared_id : "path0";
  if (declared_delta) {
    s.delta_ms = *declared_delta;
  } else if (s.rows.size() >= 2) {
    s.delta_ms = s.rows[1].t_ms - s.rows[0].t_ms;
  }
  for (const auto& v : validate_scenario(s)) {
    const auto kind = v.field == "t_ms" || v.field == "delta_ms" ? ErrorKind::grid_violation
                                                                 : ErrorKind::range_violation;
    throw Error(kind, describe(v));
  }
  return s;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io_failure, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io_failure, "cannot write " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorKind::io_failure, "write failed for " + path);
}

}  // namespace routeemu

#include "routeemu/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>

#include "routeemu/error.hpp"

namespace routeemu {

namespace {

std::optional<TimeMs> spacing_of(const std::vector<ProbeReport>& s) {
  if (s.size() < 2) return std::nullopt;
  return s[1].t_ms - s[0].t_ms;
}

}  // namespace

JoinedTable join_reports(std::span<const std::vector<ProbeReport>> series) {
  JoinedTable table;
  if (series.empty()) return table;

  std::optional<TimeMs> spacing;
  for (const auto& s : series) {
    const auto sp = spacing_of(s);
    if (!sp) continue;
    if (spacing && *spacing != *sp)
      throw Error(ErrorKind::interval_mismatch,
                  "report intervals differ: " + std::to_string(*spacing) + " ms vs " + std::to_string(*sp) + " ms");
    spacing = sp;
  }

  std::map<TimeMs, std::vector<const ProbeReport*>> by_time;
  for (std::size_t i = 0; i < series.size(); ++i) {
    for (const auto& r : series[i]) {
      auto& slot = by_time[r.t_ms];
      slot.resize(series.size(), nullptr);
      slot[i] = &r;
    }
  }
  for (const auto& [t, slot] : by_time) {
    if (std::any_of(slot.begin(), slot.end(), [](const ProbeReport* p) { return p == nullptr; })) {
      table.gaps.push_back(t);
      continue;
    }
    JoinedRow row{t, {}};
    for (const auto* p : slot) row.values.push_back(*p);
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::optional<TimeWindow> congestion_window(std::span<const CorrectionInterval> intervals, TimeMs tail_ms) {
  if (intervals.empty()) return std::nullopt;
  TimeWindow w{intervals.front().start_ms, intervals.front().end_ms};
  for (const auto& i : intervals) {
    w.start_ms = std::min(w.start_ms, i.start_ms);
    w.end_ms = std::max(w.end_ms, i.end_ms);
  }
  w.end_ms += tail_ms;
  return w;
}

double mean_absolute_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::invalid_argument, "series lengths differ");
  if (a.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
  return sum / static_cast<double>(a.size());
}

double root_mean_square_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::invalid_argument, "series lengths differ");
  if (a.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(sum / static_cast<double>(a.size()));
}

namespace {

struct Columns {
  std::vector<double> field, raw, corrected;
};

template <typename Get>
Columns columns(const JoinedTable& t, std::optional<TimeWindow> window, Get get) {
  Columns c;
  for (const auto& row : t.rows) {
    if (window && !window->contains(row.t_ms)) continue;
    c.field.push_back(get(row.values[0]));
    c.raw.push_back(get(row.values[1]));
    c.corrected.push_back(get(row.values[2]));
  }
  return c;
}

SeriesError errors(const std::vector<double>& a, const std::vector<double>& b) {
  return {mean_absolute_error(a, b), root_mean_square_error(a, b)};
}

}  // namespace

ComparisonResult compare(const std::vector<ProbeReport>& field, const std::vector<ProbeReport>& raw_replay,
                         const std::vector<ProbeReport>& corrected_replay, std::optional<TimeWindow> window) {
  const std::vector<ProbeReport> all[] = {field, raw_replay, corrected_replay};
  ComparisonResult r;
  r.joined = join_reports(all);
  if (window) {
    r.congestion_window = *window;
  } else if (!r.joined.rows.empty()) {
    r.congestion_window = {r.joined.rows.front().t_ms, r.joined.rows.back().t_ms};
  }

  auto delay = [](const ProbeReport& p) { return p.mean_delay_ms; };
  auto thr = [](const ProbeReport& p) { return static_cast<double>(p.throughput_bps); };

  const auto delay_full = columns(r.joined, std::nullopt, delay);
  const auto thr_full = columns(r.joined, std::nullopt, thr);
  r.delay_raw_full = errors(delay_full.raw, delay_full.field);
  r.delay_corrected_full = errors(delay_full.corrected, delay_full.field);
  r.throughput_raw_full = errors(thr_full.raw, thr_full.field);
  r.throughput_corrected_full = errors(thr_full.corrected, thr_full.field);

  const auto delay_win = columns(r.joined, r.congestion_window, delay);
  const auto thr_win = columns(r.joined, r.congestion_window, thr);
  const auto d_raw = errors(delay_win.raw, delay_win.field);
  const auto d_cor = errors(delay_win.corrected, delay_win.field);
  r.mae_delay_raw_ms = d_raw.mae;
  r.mae_delay_corrected_ms = d_cor.mae;
  r.rmse_delay_raw_ms = d_raw.rmse;
  r.rmse_delay_corrected_ms = d_cor.rmse;
  r.mae_throughput_raw_bps = mean_absolute_error(thr_win.raw, thr_win.field);
  r.mae_throughput_corrected_bps = mean_absolute_error(thr_win.corrected, thr_win.field);
  r.corrected_tracks_better = r.mae_delay_corrected_ms < r.mae_delay_raw_ms;
  r.tie = r.mae_delay_corrected_ms == r.mae_delay_raw_ms;
  return r;
}

std::string export_plot_data(const ComparisonResult& result) {
  static constexpr const char* kSeries[] = {"field", "raw", "corrected"};
  std::string out = "ts_ms,series,metric,value\n";
  char buf[128];
  for (const auto& row : result.joined.rows) {
    for (std::size_t i = 0; i < row.values.size() && i < 3; ++i) {
      const auto& v = row.values[i];
      std::snprintf(buf, sizeof buf, "%lld,%s,throughput_kbps,%.3f\n", static_cast<long long>(row.t_ms), kSeries[i],
                    static_cast<double>(v.throughput_bps) / 1000.0);
      out += buf;
      std::snprintf(buf, sizeof buf, "%lld,%s,delay_ms,%.3f\n", static_cast<long long>(row.t_ms), kSeries[i],
                    v.mean_delay_ms);
      out += buf;
    }
  }
  return out;
}

std::vector<PlotPoint> parse_plot_data(std::string_view csv) {
  std::vector<PlotPoint> out;
  bool header = true;
  while (!csv.empty()) {
    const auto nl = csv.find('\n');
    std::string_view line = csv.substr(0, nl);
    csv = nl == std::string_view::npos ? std::string_view{} : csv.substr(nl + 1);
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    PlotPoint p;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    const auto c3 = line.find(',', c2 + 1);
    if (c1 == std::string_view::npos || c2 == std::string_view::npos || c3 == std::string_view::npos)
      throw Error(ErrorKind::malformed_row, "plot row needs 4 fields");
    long long t = 0;
    std::from_chars(line.data(), line.data() + c1, t);
    p.t_ms = t;
    p.series = std::string(line.substr(c1 + 1, c2 - c1 - 1));
    p.metric = std::string(line.substr(c2 + 1, c3 - c2 - 1));
    const auto value = line.substr(c3 + 1);
    std::from_chars(value.data(), value.data() + value.size(), p.value);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace routeemu

#include "routeemu/probe.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>

#include "routeemu/error.hpp"
#include "routeemu/ingest.hpp"

namespace routeemu {

namespace {

double round_to(double v, double scale) { return std::round(v * scale) / scale; }

}  // namespace

void validate(const ProbeConfig& cfg) {
  if (!(cfg.offered_load_bps > 0.0)) throw Error(ErrorKind::invalid_argument, "offered_load_bps must be > 0");
  if (cfg.packet_size_bytes < 28) throw Error(ErrorKind::invalid_argument, "packet_size_bytes must be >= 28");
  if (cfg.report_interval_ms <= 0) throw Error(ErrorKind::invalid_argument, "report_interval_ms must be > 0");
  if (cfg.duration_ms < 0) throw Error(ErrorKind::invalid_argument, "duration_ms must be >= 0");
}

std::vector<SendRecord> send_schedule(const ProbeConfig& cfg) {
  validate(cfg);
  const double spacing = cfg.spacing_ms();
  std::vector<SendRecord> out;
  for (std::uint64_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * spacing;
    if (t >= static_cast<double>(cfg.duration_ms)) break;
    out.push_back({t, k, cfg.packet_size_bytes});
  }
  return out;
}

std::vector<Packet> to_packets(std::span<const SendRecord> schedule) {
  std::vector<Packet> out;
  out.reserve(schedule.size());
  for (const auto& s : schedule) out.push_back(Packet{s.seq, s.size_bytes, s.send_ts_ms, {}});
  return out;
}

ProbeAggregator::ProbeAggregator(ProbeConfig cfg, AggregateOptions options)
    : cfg_(cfg), options_(options) {
  validate(cfg_);
  const double span = static_cast<double>(cfg_.duration_ms) - options_.start_ms;
  const auto n = span > 0.0 ? static_cast<std::size_t>(std::ceil(span / static_cast<double>(cfg_.report_interval_ms))) : 0;
  sent_.resize(n);
  recv_.resize(n);
}

std::optional<std::size_t> ProbeAggregator::send_bin(double send_ts) const {
  const double rel = send_ts - options_.start_ms;
  if (rel < 0.0) return std::nullopt;
  const auto k = static_cast<std::size_t>(std::floor(rel / static_cast<double>(cfg_.report_interval_ms)));
  if (k >= sent_.size()) return std::nullopt;
  return k;
}

void ProbeAggregator::on_send(const SendRecord& send) {
  if (auto k = send_bin(send.send_ts_ms)) ++sent_[*k].expected;
}

void ProbeAggregator::on_egress(const EgressEvent& event) {
  const auto k = send_bin(event.packet.ingress_ts_ms);
  if (!k) return;
  ++sent_[*k].resolved;
  if (event.dropped) return;
  ++sent_[*k].received;
  const Arrival a{event.egress_ts_ms - event.packet.ingress_ts_ms, event.egress_ts_ms, event.packet.size_bytes};
  if (options_.normalize_min_delay) {
    held_.push_back(a);
  } else {
    place_arrival(a, 0.0);
  }
}

void ProbeAggregator::place_arrival(const Arrival& a, double delay_offset) {
  const double delay = a.delay - delay_offset;
  if (!anchor_) anchor_ = a.egress - cfg_.spacing_ms() / 2.0;
  if (last_delay_) jitter_ += (std::abs(delay - *last_delay_) - jitter_) / 16.0;
  last_delay_ = delay;

  const double rel = a.egress - *anchor_;
  const auto j = static_cast<std::size_t>(std::floor(rel / static_cast<double>(cfg_.report_interval_ms)));
  if (j >= recv_.size()) return;
  auto& bin = recv_[j];
  bin.bytes += a.size;
  bin.delay_sum += delay;
  ++bin.delay_count;
  bin.jitter_end = jitter_;
  bin.touched = true;
}

ProbeReport ProbeAggregator::build(std::size_t k) {
  const auto& s = sent_[k];
  const auto& r = recv_[k];
  ProbeReport out;
  out.t_ms = static_cast<TimeMs>(std::llround(options_.start_ms)) + static_cast<TimeMs>(k) * cfg_.report_interval_ms;
  out.throughput_bps = std::llround(static_cast<double>(r.bytes) * 8.0 * 1000.0 /
                                    static_cast<double>(cfg_.report_interval_ms));
  if (r.delay_count > 0) last_mean_delay_ = r.delay_sum / static_cast<double>(r.delay_count);
  out.mean_delay_ms = last_mean_delay_;
  if (r.touched) last_jitter_ = r.jitter_end;
  out.jitter_ms = last_jitter_;
  out.packets_expected = s.expected;
  out.packets_received = s.received;
  out.loss_rate = s.expected > 0 ? 1.0 - static_cast<double>(s.received) / static_cast<double>(s.expected) : 0.0;
  out.delay_offset_uncorrected = options_.delay_offset_uncorrected;
  return out;
}

std::vector<ProbeReport> ProbeAggregator::poll(double now_ms) {
  std::vector<ProbeReport> out;
  if (options_.normalize_min_delay || !anchor_) return out;
  const auto w = static_cast<double>(cfg_.report_interval_ms);
  while (next_report_ < sent_.size()) {
    const double edge = static_cast<double>(next_report_ + 1) * w;
    const auto& s = sent_[next_report_];
    if (now_ms < options_.start_ms + edge || now_ms < *anchor_ + edge || s.resolved < s.expected) break;
    out.push_back(build(next_report_++));
  }
  return out;
}

std::vector<ProbeReport> ProbeAggregator::finish() {
  if (!held_.empty()) {
    double min_delay = std::numeric_limits<double>::infinity();
    for (const auto& a : held_) min_delay = std::min(min_delay, a.delay);
    std::stable_sort(held_.begin(), held_.end(), [](const Arrival& a, const Arrival& b) { return a.egress < b.egress; });
    for (const auto& a : held_) place_arrival(a, min_delay);
    held_.clear();
  }
  std::vector<ProbeReport> out;
  while (next_report_ < sent_.size()) out.push_back(build(next_report_++));
  return out;
}

std::vector<ProbeReport> aggregate(std::span<const SendRecord> sends, std::span<const EgressEvent> events,
                                   const ProbeConfig& cfg, AggregateOptions options) {
  ProbeAggregator agg(cfg, options);
  for (const auto& s : sends) agg.on_send(s);
  std::vector<const EgressEvent*> ordered;
  ordered.reserve(events.size());
  for (const auto& e : events) ordered.push_back(&e);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const EgressEvent* a, const EgressEvent* b) { return a->egress_ts_ms < b->egress_ts_ms; });
  for (const auto* e : ordered) agg.on_egress(*e);
  return agg.finish();
}

std::string write_probe_csv(std::span<const ProbeReport> reports) {
  std::string out;
  if (!reports.empty() && reports.front().delay_offset_uncorrected) out += "# delay_offset_uncorrected=1\n";
  out += "ts_ms,throughput_kbps,mean_delay_ms,jitter_ms,loss_rate,received,expected\n";
  char buf[160];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%lld,%s,%.3f,%.3f,%.6f,%llu,%llu\n", static_cast<long long>(r.t_ms),
                  format_kbps(r.throughput_bps).c_str(), r.mean_delay_ms, r.jitter_ms, r.loss_rate,
                  static_cast<unsigned long long>(r.packets_received),
                  static_cast<unsigned long long>(r.packets_expected));
    out += buf;
  }
  return out;
}

namespace {

template <typename T>
bool parse_number(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && !s.empty();
}

}  // namespace

std::vector<ProbeReport> read_probe_csv(std::string_view text) {
  std::vector<ProbeReport> out;
  bool uncorrected = false;
  bool header_seen = false;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.find("delay_offset_uncorrected=1") != std::string_view::npos) uncorrected = true;
      continue;
    }
    if (!header_seen) {
      if (line != "ts_ms,throughput_kbps,mean_delay_ms,jitter_ms,loss_rate,received,expected")
        throw Error(ErrorKind::malformed_row, "line " + std::to_string(line_no) + ": unexpected probe report header");
      header_seen = true;
      continue;
    }
    std::vector<std::string_view> f;
    for (std::size_t pos = 0;;) {
      const auto comma = line.find(',', pos);
      f.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    ProbeReport r;
    long long t = 0;
    unsigned long long received = 0, expected = 0;
    if (f.size() != 7 || !parse_number(f[0], t) || !parse_number(f[2], r.mean_delay_ms) ||
        !parse_number(f[3], r.jitter_ms) || !parse_number(f[4], r.loss_rate) || !parse_number(f[5], received) ||
        !parse_number(f[6], expected)) {
      throw Error(ErrorKind::malformed_row, "line " + std::to_string(line_no) + ": malformed probe report");
    }
    r.t_ms = t;
    r.throughput_bps = parse_kbps(f[1]);
    r.packets_received = received;
    r.packets_expected = expected;
    r.delay_offset_uncorrected = uncorrected;
    out.push_back(r);
  }
  return out;
}

std::vector<NetSample> net_samples_from_reports(std::span<const ProbeReport> reports) {
  std::vector<NetSample> out;
  out.reserve(reports.size());
  for (const auto& r : reports) {
    out.push_back(NetSample{r.t_ms, r.throughput_bps, round_to(r.mean_delay_ms, 1e3), round_to(r.jitter_ms, 1e3),
                            std::clamp(round_to(r.loss_rate, 1e6), 0.0, 1.0)});
  }
  return out;
}

}  // namespace routeemu

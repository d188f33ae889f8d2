#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "routeemu/link_emulator.hpp"
#include "routeemu/trace_model.hpp"

namespace routeemu {

struct ProbeConfig {
  double offered_load_bps = 1'000'000.0;
  std::uint32_t packet_size_bytes = 1250;  // includes IP + UDP headers
  TimeMs report_interval_ms = 50;
  TimeMs duration_ms = 30'000;
  std::uint64_t seed = 1;

  double spacing_ms() const { return packet_size_bytes * 8.0 * 1000.0 / offered_load_bps; }
};

void validate(const ProbeConfig& cfg);

struct SendRecord {
  double send_ts_ms = 0.0;
  std::uint64_t seq = 0;
  std::uint32_t size_bytes = 0;

  friend bool operator==(const SendRecord&, const SendRecord&) = default;
};

struct ProbeReport {
  TimeMs t_ms = 0;
  std::int64_t throughput_bps = 0;
  double mean_delay_ms = 0.0;
  double jitter_ms = 0.0;
  double loss_rate = 0.0;
  std::uint64_t packets_received = 0;
  std::uint64_t packets_expected = 0;
  bool delay_offset_uncorrected = false;

  friend bool operator==(const ProbeReport&, const ProbeReport&) = default;
};

/// Constant-bitrate schedule: packet k leaves at k * spacing, for all k with
/// send time < duration.
std::vector<SendRecord> send_schedule(const ProbeConfig& cfg);

std::vector<Packet> to_packets(std::span<const SendRecord> schedule);

struct AggregateOptions {
  // Start of interval 0 on the sender clock (non-zero after a seek).
  double start_ms = 0.0;
  // Sender and receiver clocks are not shared (cross-process wall clock).
  bool delay_offset_uncorrected = false;
  // Subtract the run's minimum observed delay from every delay sample.
  bool normalize_min_delay = false;
};

/// Incremental per-interval aggregation of one probe flow.
///
/// Throughput, delay and jitter belong to receive intervals anchored at the
/// first arrival (minus half a packet spacing so interval edges fall between
/// packets). Loss belongs to the send interval of the lost packet. Jitter is
/// the 1/16-gain smoothed |d_i - d_{i-1}| carried across intervals.
class ProbeAggregator {
 public:
  explicit ProbeAggregator(ProbeConfig cfg, AggregateOptions options = {});

  void on_send(const SendRecord& send);
  void on_egress(const EgressEvent& event);

  /// Reports that became final by time now_ms (all sends of the interval
  /// resolved and its receive window closed).
  std::vector<ProbeReport> poll(double now_ms);
  /// Finalizes every remaining interval; unresolved packets count as lost.
  std::vector<ProbeReport> finish();

  std::size_t interval_count() const { return sent_.size(); }

 private:
  struct SendBin {
    std::uint64_t expected = 0;
    std::uint64_t resolved = 0;
    std::uint64_t received = 0;
  };
  struct RecvBin {
    std::uint64_t bytes = 0;
    double delay_sum = 0.0;
    std::uint64_t delay_count = 0;
    double jitter_end = 0.0;
    bool touched = false;
  };
  struct Arrival {
    double delay;
    double egress;
    std::uint32_t size;
  };

  std::optional<std::size_t> send_bin(double send_ts) const;
  void place_arrival(const Arrival& a, double delay_offset);
  ProbeReport build(std::size_t k);

  ProbeConfig cfg_;
  AggregateOptions options_;
  std::vector<SendBin> sent_;
  std::vector<RecvBin> recv_;
  std::vector<Arrival> held_;  // arrivals kept back until min-delay is known
  std::optional<double> anchor_;
  std::optional<double> last_delay_;
  double jitter_ = 0.0;
  std::size_t next_report_ = 0;
  double last_mean_delay_ = 0.0;
  double last_jitter_ = 0.0;
};

/// Batch form of ProbeAggregator over a full run.
std::vector<ProbeReport> aggregate(std::span<const SendRecord> sends,
                                   std::span<const EgressEvent> events, const ProbeConfig& cfg,
                                   AggregateOptions options = {});

std::string write_probe_csv(std::span<const ProbeReport> reports);
std::vector<ProbeReport> read_probe_csv(std::string_view text);

/// Treats probe reports as a measured net trace (values quantized to scenario
/// file precision, so writing and re-reading the derived scenario is lossless).
std::vector<NetSample> net_samples_from_reports(std::span<const ProbeReport> reports);

}  // namespace routeemu

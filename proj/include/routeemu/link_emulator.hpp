#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "routeemu/trace_model.hpp"

namespace routeemu {

inline constexpr double kUnlimitedRate = std::numeric_limits<double>::infinity();

struct LinkParams {
  double rate_bps = kUnlimitedRate;  // 0 blocks the queue
  double base_delay_ms = 0.0;
  double jitter_ms = 0.0;
  double loss_rate = 0.0;

  friend bool operator==(const LinkParams&, const LinkParams&) = default;
};

LinkParams params_from_row(const ScenarioRow& row);

struct Packet {
  std::uint64_t seq = 0;
  std::uint32_t size_bytes = 1;
  double ingress_ts_ms = 0.0;
  std::vector<std::uint8_t> payload;

  friend bool operator==(const Packet&, const Packet&) = default;
};

enum class DropReason { none, loss_draw, queue_full };

struct EgressEvent {
  Packet packet;
  double egress_ts_ms = 0.0;
  bool dropped = false;
  DropReason drop_reason = DropReason::none;

  friend bool operator==(const EgressEvent&, const EgressEvent&) = default;
};

struct LinkConfig {
  // Unset capacity/depth follow the current rate (see effective_*).
  std::optional<double> queue_capacity_bytes;
  std::optional<double> bucket_depth_bytes;
  std::uint32_t mtu_bytes = 1500;
  std::uint64_t rng_seed = 1;

  /// 500 ms worth of bytes at `rate_bps`, never below 10 MTUs.
  double effective_queue_capacity(double rate_bps) const;
  /// max(MTU, 10 ms worth of bytes at `rate_bps`).
  double effective_bucket_depth(double rate_bps) const;
};

/// One emulated path: loss draw -> tail-drop queue -> rate serializer -> delay line.
///
/// Calls carry timestamps and must be non-decreasing in time; a regression
/// throws Error(time_regression). Queued packets are always served at the rate
/// in force, so a rate change also re-times the packet currently in service.
class Link {
 public:
  explicit Link(LinkConfig config = {}, LinkParams initial = {});

  void set_params(double t_ms, const LinkParams& params);

  /// Admits a packet at packet.ingress_ts_ms. Returns the drop event when the
  /// packet is discarded; the same event is also reported by run_until.
  std::optional<EgressEvent> ingress(Packet packet);

  /// All events (deliveries and drops) with time <= t_ms, in time order.
  std::vector<EgressEvent> run_until(double t_ms);

  /// Discards queued and in-flight packets and rewinds the link to t_ms with a
  /// freshly seeded RNG.
  void reset(double t_ms, const LinkParams& params);

  double now() const { return now_; }
  const LinkParams& params() const { return params_; }
  const LinkConfig& config() const { return config_; }
  std::size_t queued_packets() const { return queue_.size(); }
  double queued_bytes() const { return queued_bytes_; }
  double queue_capacity_bytes() const { return capacity_bytes_; }
  std::size_t in_flight() const { return pending_.size(); }
  /// Earliest time at which run_until would return something new; infinity when idle.
  double next_event_ms() const;

 private:
  void check_time(double t_ms) const;
  void advance(double t_ms);
  void start_service(double t_ms);
  double head_finish() const;
  void release(Packet packet, double departure_ms);

  LinkConfig config_;
  LinkParams params_;
  double now_ = 0.0;
  double capacity_bytes_ = 0.0;

  std::deque<Packet> queue_;
  double queued_bytes_ = 0.0;
  double head_start_ms_ = 0.0;
  double head_remaining_bits_ = 0.0;

  std::multimap<double, EgressEvent> pending_;
  double last_release_ms_ = -std::numeric_limits<double>::infinity();

  std::mt19937_64 loss_rng_;
  std::mt19937_64 jitter_rng_;
};

struct DriveOptions {
  double drain_ms = 2000.0;
};

/// Replays a scenario timeline (zero-order hold between rows) against a
/// time-sorted packet sequence and returns every resulting event.
std::vector<EgressEvent> drive_from_scenario(Link& link, const Scenario& s,
                                             std::vector<Packet> packets,
                                             DriveOptions options = {});

}  // namespace routeemu

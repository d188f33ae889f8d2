#pragma once

#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>
#include <vector>

#include "routeemu/probe.hpp"
#include "routeemu/udp.hpp"

namespace routeemu {

/// Shared time base for a live sender/receiver pair, in ms since `epoch`.
struct ProbeClock {
  std::chrono::steady_clock::time_point epoch = std::chrono::steady_clock::now();
  double now_ms() const;
};

/// Paces the CBR schedule onto a UDP socket, with send time 0 at clock.epoch. Each datagram carries
/// (seq, send_ts_ms) in its first 16 bytes; the UDP payload is
/// packet_size - 28 bytes so shaping sees the configured size.
std::vector<SendRecord> run_udp_probe_sender(const ProbeConfig& cfg, const UdpEndpoint& target,
                                             const ProbeClock& clock);

/// Collects probe datagrams and turns them into delivery events.
class UdpProbeReceiver {
 public:
  UdpProbeReceiver(const UdpEndpoint& bind_to, const ProbeClock& clock);
  ~UdpProbeReceiver();

  std::uint16_t port() const { return socket_.local_port(); }
  void stop();
  std::vector<EgressEvent> deliveries() const;

 private:
  void loop();

  UdpSocket socket_;
  ProbeClock clock_;
  mutable std::mutex mutex_;
  std::vector<EgressEvent> deliveries_;
  std::atomic<bool> stop_{false};
  std::thread thread_;
};

}  // namespace routeemu

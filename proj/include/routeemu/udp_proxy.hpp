#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <thread>
#include <vector>

#include "routeemu/session_runner.hpp"
#include "routeemu/udp.hpp"

namespace routeemu {

/// Live data plane: one UDP relay per path. Each relay stamps arrivals, pushes
/// them through the path's link engine and forwards them to the receiver at
/// their release time.
class UdpProxy {
 public:
  /// listen_ports[i] belongs to path i (0 = ephemeral). `receivers` holds one
  /// endpoint per path, or a single endpoint shared by all paths. The runner
  /// must use the wall clock.
  UdpProxy(SessionRunner& runner, const std::string& bind_host,
           const std::vector<std::uint16_t>& listen_ports, const std::vector<UdpEndpoint>& receivers);
  ~UdpProxy();

  UdpProxy(const UdpProxy&) = delete;
  UdpProxy& operator=(const UdpProxy&) = delete;

  std::uint16_t port(std::size_t path) const;
  std::uint64_t forwarded() const { return forwarded_.load(); }
  void stop();

 private:
  void receive_loop(std::size_t path);

  SessionRunner& runner_;
  std::vector<std::unique_ptr<UdpSocket>> sockets_;
  std::vector<sockaddr_in> receivers_;
  std::vector<std::thread> threads_;
  std::vector<std::uint64_t> next_seq_;
  std::atomic<bool> stop_{false};
  std::atomic<std::uint64_t> forwarded_{0};
};

/// Live backend run: one CBR probe per path through loopback relays on the
/// wall clock, measured by an in-process receiver (shared clock, so delays are
/// exact up to scheduling noise). Returns one report series per path.
std::vector<std::vector<ProbeReport>> run_udp_probe_replay(std::vector<PathSetup> paths, ProbeConfig probe,
                                                           const std::string& bind_host = "127.0.0.1",
                                                           double settle_ms = 1000.0);

}  // namespace routeemu

#include "routeemu/probe_udp.hpp"

#include <algorithm>
#include <cstring>

#include "routeemu/realtime.hpp"

namespace routeemu {

namespace {

constexpr std::size_t kStampBytes = 16;
constexpr std::uint32_t kHeaderBytes = 28;

}  // namespace

double ProbeClock::now_ms() const {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - epoch).count();
}

std::vector<SendRecord> run_udp_probe_sender(const ProbeConfig& cfg, const UdpEndpoint& target,
                                             const ProbeClock& clock) {
  request_realtime_priority();
  const auto schedule = send_schedule(cfg);
  UdpSocket socket(UdpEndpoint{"0.0.0.0", 0});
  const auto to = to_sockaddr(target);
  std::vector<std::uint8_t> payload(std::max<std::size_t>(cfg.packet_size_bytes - kHeaderBytes, kStampBytes));
  for (std::size_t i = kStampBytes; i < payload.size(); ++i) payload[i] = static_cast<std::uint8_t>(cfg.seed + i);

  std::vector<SendRecord> sent;
  sent.reserve(schedule.size());
  for (const auto& s : schedule) {
    const auto due = clock.epoch + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                       std::chrono::duration<double, std::milli>(s.send_ts_ms));
    std::this_thread::sleep_until(due);
    const double now = clock.now_ms();
    std::memcpy(payload.data(), &s.seq, sizeof s.seq);
    std::memcpy(payload.data() + 8, &now, sizeof now);
    socket.send_to(payload, to);
    sent.push_back(SendRecord{now, s.seq, s.size_bytes});
  }
  return sent;
}

UdpProbeReceiver::UdpProbeReceiver(const UdpEndpoint& bind_to, const ProbeClock& clock)
    : socket_(bind_to), clock_(clock) {
  thread_ = std::thread([this] { loop(); });
}

UdpProbeReceiver::~UdpProbeReceiver() { stop(); }

void UdpProbeReceiver::stop() {
  stop_ = true;
  if (thread_.joinable()) thread_.join();
}

void UdpProbeReceiver::loop() {
  request_realtime_priority();
  while (!stop_) {
    auto d = socket_.receive(std::chrono::milliseconds(20));
    if (!d || d->bytes.size() < kStampBytes) continue;
    const double arrival = clock_.now_ms();
    Packet p;
    std::memcpy(&p.seq, d->bytes.data(), sizeof p.seq);
    std::memcpy(&p.ingress_ts_ms, d->bytes.data() + 8, sizeof p.ingress_ts_ms);
    p.size_bytes = static_cast<std::uint32_t>(d->bytes.size()) + kHeaderBytes;
    std::lock_guard lock(mutex_);
    deliveries_.push_back(EgressEvent{std::move(p), arrival, false, DropReason::none});
  }
}

std::vector<EgressEvent> UdpProbeReceiver::deliveries() const {
  std::lock_guard lock(mutex_);
  return deliveries_;
}

}  // namespace routeemu

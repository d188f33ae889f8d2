#include "routeemu/udp_proxy.hpp"

#include <algorithm>

#include "routeemu/error.hpp"
#include "routeemu/probe_udp.hpp"
#include "routeemu/realtime.hpp"

namespace routeemu {

namespace {

// IPv4 + UDP header bytes counted by the shaper on top of the payload.
constexpr std::uint32_t kHeaderBytes = 28;

}  // namespace

UdpProxy::UdpProxy(SessionRunner& runner, const std::string& bind_host, const std::vector<std::uint16_t>& listen_ports,
                   const std::vector<UdpEndpoint>& receivers)
    : runner_(runner), next_seq_(listen_ports.size(), 0) {
  if (runner_.clock() != ClockKind::wall) throw Error(ErrorKind::invalid_argument, "udp_proxy needs the wall clock");
  const auto paths = runner_.with_session([](ReplaySession& s) { return s.path_count(); });
  if (listen_ports.size() != paths)
    throw Error(ErrorKind::invalid_argument, "one listen port per path is required");
  if (receivers.size() != 1 && receivers.size() != paths)
    throw Error(ErrorKind::invalid_argument, "need one receiver, or one per path");
  for (std::size_t i = 0; i < paths; ++i) receivers_.push_back(to_sockaddr(receivers[receivers.size() == 1 ? 0 : i]));
  for (const auto port : listen_ports) sockets_.push_back(std::make_unique<UdpSocket>(UdpEndpoint{bind_host, port}));

  runner_.with_session([this](ReplaySession& s) {
    s.set_egress_handler([this](std::size_t path, const EgressEvent& e) {
      if (e.dropped) return;
      sockets_[path]->send_to(e.packet.payload, receivers_[path]);
      ++forwarded_;
    });
    return 0;
  });
  for (std::size_t i = 0; i < sockets_.size(); ++i) threads_.emplace_back([this, i] { receive_loop(i); });
}

UdpProxy::~UdpProxy() { stop(); }

void UdpProxy::stop() {
  if (stop_.exchange(true)) return;
  for (auto& t : threads_)
    if (t.joinable()) t.join();
  runner_.with_session([](ReplaySession& s) {
    s.set_egress_handler(nullptr);
    return 0;
  });
}

std::uint16_t UdpProxy::port(std::size_t path) const { return sockets_.at(path)->local_port(); }

void UdpProxy::receive_loop(std::size_t path) {
  request_realtime_priority();
  while (!stop_) {
    auto d = sockets_[path]->receive(std::chrono::milliseconds(20));
    if (!d) continue;
    Packet p;
    p.seq = next_seq_[path]++;
    p.size_bytes = static_cast<std::uint32_t>(d->bytes.size()) + kHeaderBytes;
    p.payload = std::move(d->bytes);
    runner_.submit(path, std::move(p));
  }
}

std::vector<std::vector<ProbeReport>> run_udp_probe_replay(std::vector<PathSetup> paths, ProbeConfig probe,
                                                           const std::string& bind_host, double settle_ms) {
  validate(probe);
  const std::size_t n = paths.size();
  SessionOptions options;
  options.drain_ms = settle_ms;
  SessionRunner runner(ReplaySession(std::move(paths), options), ClockKind::wall);
  const auto span = runner.with_session([](ReplaySession& s) { return s.timeline_end_ms() - s.now(); });
  probe.duration_ms = std::min<TimeMs>(probe.duration_ms, static_cast<TimeMs>(span));

  const ProbeClock clock;
  std::vector<std::unique_ptr<UdpProbeReceiver>> receivers;
  std::vector<UdpEndpoint> receiver_eps;
  for (std::size_t i = 0; i < n; ++i) {
    receivers.push_back(std::make_unique<UdpProbeReceiver>(UdpEndpoint{bind_host, 0}, clock));
    receiver_eps.push_back(UdpEndpoint{bind_host, receivers.back()->port()});
  }
  UdpProxy proxy(runner, bind_host, std::vector<std::uint16_t>(n, 0), receiver_eps);

  std::vector<std::vector<SendRecord>> sends(n);
  runner.control(ControlCommand{ControlKind::start});
  const ProbeClock send_clock{std::chrono::steady_clock::now()};
  {
    std::vector<std::thread> senders;
    for (std::size_t i = 0; i < n; ++i) {
      senders.emplace_back([&, i] {
        sends[i] = run_udp_probe_sender(probe, UdpEndpoint{bind_host, proxy.port(i)}, send_clock);
      });
    }
    for (auto& t : senders) t.join();
  }
  std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(settle_ms));
  proxy.stop();

  // Receivers share the sender epoch only up to the offset between the clocks.
  const double offset = std::chrono::duration<double, std::milli>(send_clock.epoch - clock.epoch).count();
  std::vector<std::vector<ProbeReport>> out;
  for (std::size_t i = 0; i < n; ++i) {
    receivers[i]->stop();
    auto deliveries = receivers[i]->deliveries();
    for (auto& d : deliveries) d.egress_ts_ms -= offset;
    out.push_back(aggregate(sends[i], deliveries, probe));
  }
  runner.stop();
  return out;
}

}  // namespace routeemu

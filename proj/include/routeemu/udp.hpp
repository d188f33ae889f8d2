#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <netinet/in.h>

namespace routeemu {

struct UdpEndpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

UdpEndpoint parse_endpoint(const std::string& text);  // "host:port"

struct Datagram {
  std::vector<std::uint8_t> bytes;
  sockaddr_in from{};
};

/// Owning IPv4 UDP socket.
class UdpSocket {
 public:
  /// Binds to host:port (port 0 picks an ephemeral port). Throws bind_failure.
  explicit UdpSocket(const UdpEndpoint& bind_to);
  ~UdpSocket();
  UdpSocket(UdpSocket&& other) noexcept;
  UdpSocket& operator=(UdpSocket&& other) noexcept;
  UdpSocket(const UdpSocket&) = delete;
  UdpSocket& operator=(const UdpSocket&) = delete;

  std::uint16_t local_port() const;
  void send_to(std::span<const std::uint8_t> bytes, const sockaddr_in& to) const;
  void send_to(std::span<const std::uint8_t> bytes, const UdpEndpoint& to) const;
  std::optional<Datagram> receive(std::chrono::milliseconds timeout) const;

 private:
  int fd_ = -1;
};

sockaddr_in to_sockaddr(const UdpEndpoint& ep);

}  // namespace routeemu

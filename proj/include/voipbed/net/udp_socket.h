#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "voipbed/net/endpoint.h"

namespace voipbed::net {

class BindError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct Datagram {
    std::string payload;
    Endpoint from;

    std::span<const std::uint8_t> bytes() const {
        return {reinterpret_cast<const std::uint8_t*>(payload.data()), payload.size()};
    }
};

// Non-blocking IPv4 UDP socket. Move-only; closes on destruction.
class UdpSocket {
  public:
    UdpSocket() = default;
    ~UdpSocket();
    UdpSocket(UdpSocket&& other) noexcept;
    UdpSocket& operator=(UdpSocket&& other) noexcept;
    UdpSocket(const UdpSocket&) = delete;
    UdpSocket& operator=(const UdpSocket&) = delete;

    // Port 0 binds an ephemeral port. Throws BindError.
    static UdpSocket bind(const Endpoint& local);

    bool valid() const { return fd_ >= 0; }
    int fd() const { return fd_; }
    Endpoint local_endpoint() const;

    bool send_to(const Endpoint& to, std::string_view payload) const;
    bool send_to(const Endpoint& to, std::span<const std::uint8_t> payload) const;

    // Returns nullopt when nothing is queued.
    std::optional<Datagram> receive() const;

    // Blocks up to `timeout` for the socket to become readable.
    bool wait_readable(std::chrono::nanoseconds timeout) const;

  private:
    explicit UdpSocket(int fd) : fd_(fd) {}
    int fd_ = -1;
};

}  // namespace voipbed::net

#include "voipbed/net/udp_socket.h"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>
#include <utility>

namespace voipbed::net {

namespace {

sockaddr_in to_sockaddr(const Endpoint& ep) {
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_addr.s_addr = htonl(ep.address);
    sa.sin_port = htons(ep.port);
    return sa;
}

constexpr int kSocketBuffer = 4 * 1024 * 1024;
constexpr std::size_t kMaxDatagram = 65536;

}  // namespace

UdpSocket::~UdpSocket() {
    if (fd_ >= 0) ::close(fd_);
}

UdpSocket::UdpSocket(UdpSocket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}

UdpSocket& UdpSocket::operator=(UdpSocket&& other) noexcept {
    if (this != &other) {
        if (fd_ >= 0) ::close(fd_);
        fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
}

UdpSocket UdpSocket::bind(const Endpoint& local) {
    int fd = ::socket(AF_INET, SOCK_DGRAM | SOCK_NONBLOCK | SOCK_CLOEXEC, 0);
    if (fd < 0) throw BindError(std::string("socket: ") + std::strerror(errno));
    UdpSocket sock(fd);
    int size = kSocketBuffer;
    ::setsockopt(fd, SOL_SOCKET, SO_RCVBUF, &size, sizeof size);
    ::setsockopt(fd, SOL_SOCKET, SO_SNDBUF, &size, sizeof size);
    auto sa = to_sockaddr(local);
    if (::bind(fd, reinterpret_cast<const sockaddr*>(&sa), sizeof sa) != 0) {
        throw BindError("bind " + local.to_string() + ": " + std::strerror(errno));
    }
    return sock;
}

Endpoint UdpSocket::local_endpoint() const {
    sockaddr_in sa{};
    socklen_t len = sizeof sa;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&sa), &len);
    return Endpoint{ntohl(sa.sin_addr.s_addr), ntohs(sa.sin_port)};
}

bool UdpSocket::send_to(const Endpoint& to, std::string_view payload) const {
    auto sa = to_sockaddr(to);
    auto n = ::sendto(fd_, payload.data(), payload.size(), 0, reinterpret_cast<const sockaddr*>(&sa), sizeof sa);
    return n == static_cast<ssize_t>(payload.size());
}

bool UdpSocket::send_to(const Endpoint& to, std::span<const std::uint8_t> payload) const {
    return send_to(to, std::string_view(reinterpret_cast<const char*>(payload.data()), payload.size()));
}

std::optional<Datagram> UdpSocket::receive() const {
    thread_local std::array<char, kMaxDatagram> buffer;
    sockaddr_in sa{};
    socklen_t len = sizeof sa;
    auto n = ::recvfrom(fd_, buffer.data(), buffer.size(), 0, reinterpret_cast<sockaddr*>(&sa), &len);
    if (n < 0) return std::nullopt;
    return Datagram{std::string(buffer.data(), static_cast<std::size_t>(n)),
                    Endpoint{ntohl(sa.sin_addr.s_addr), ntohs(sa.sin_port)}};
}

bool UdpSocket::wait_readable(std::chrono::nanoseconds timeout) const {
    pollfd pfd{fd_, POLLIN, 0};
    timespec ts{};
    if (timeout.count() > 0) {
        ts.tv_sec = static_cast<time_t>(timeout.count() / 1'000'000'000);
        ts.tv_nsec = static_cast<long>(timeout.count() % 1'000'000'000);
    }
    int rc = ::ppoll(&pfd, 1, &ts, nullptr);
    return rc > 0 && (pfd.revents & POLLIN);
}

}  // namespace voipbed::net

#pragma once

#include <atomic>
#include <memory>

#include "voipbed/enumdns/zone.h"
#include "voipbed/net/event_loop.h"
#include "voipbed/net/udp_socket.h"
#include "voipbed/server/profile.h"
#include "voipbed/server/work_queue.h"

namespace voipbed::enumdns {

struct EnumServerStats {
    std::uint64_t served = 0;  // answered, NOERROR or NXDOMAIN
    std::uint64_t nxdomain = 0;
    std::uint64_t shed = 0;
    std::uint64_t malformed = 0;
};

// Authoritative NAPTR server over UDP on its own loop thread. Each query is
// admitted to the profile's work queue and answered once service has started
// and the per-query delay has elapsed.
class EnumServer {
  public:
    // Throws EnumError(BindFailure).
    EnumServer(std::shared_ptr<const EnumZone> zone, const net::Endpoint& bind,
               server::ServerProfile profile = server::ServerProfile::enum_default());
    ~EnumServer();
    EnumServer(const EnumServer&) = delete;
    EnumServer& operator=(const EnumServer&) = delete;

    net::Endpoint endpoint() const { return endpoint_; }
    const EnumZone& zone() const { return *zone_; }
    const server::ServerProfile& profile() const { return profile_; }
    std::uint64_t served() const { return served_.load(); }
    EnumServerStats stats() const;
    server::QueueStats queue_stats() const { return queue_.stats(); }

  private:
    void on_readable();
    void handle(const net::Datagram& d);

    std::shared_ptr<const EnumZone> zone_;
    server::ServerProfile profile_;
    net::EventLoop loop_;
    net::UdpSocket sock_;
    net::Endpoint endpoint_;
    server::WorkQueue queue_;
    server::RateMeter meter_;
    std::atomic<std::uint64_t> served_{0}, nxdomain_{0}, shed_{0}, malformed_{0};
    std::unique_ptr<net::LoopThread> thread_;
};

}  // namespace voipbed::enumdns

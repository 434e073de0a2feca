#pragma once

#include <atomic>
#include <memory>
#include <optional>
#include <unordered_map>

#include "voipbed/enumdns/resolver.h"
#include "voipbed/ims/location.h"
#include "voipbed/ims/routing.h"
#include "voipbed/net/event_loop.h"
#include "voipbed/net/udp_socket.h"
#include "voipbed/server/profile.h"
#include "voipbed/server/work_queue.h"
#include "voipbed/sip/transaction_layer.h"

namespace voipbed::ims {

struct ImsOptions {
    net::Endpoint bind = net::Endpoint::loopback(5060);
    std::string domain = "ims.test";
    server::ServerProfile profile = server::ServerProfile::ims_default();
    bool enum_enabled = false;
    std::optional<enumdns::ResolverOptions> resolver;
    std::map<std::string, net::Endpoint> hosts;
    sip::TxTimers timers{};
};

struct ProxyStats {
    std::uint64_t received = 0;
    std::uint64_t malformed = 0;
    std::uint64_t shed = 0;
    std::uint64_t registrations = 0;
    std::uint64_t invites = 0;
    std::uint64_t forwarded = 0;
    std::uint64_t enum_lookups = 0;
    std::uint64_t rejected = 0;
    bool hard_failed = false;
};

// Registrar + stateful INVITE proxy. Every inbound signal goes through the
// profile's work queue and is acted on after its per-signal delay. ACK, BYE
// and CANCEL are relayed statelessly toward the Request-URI.
class RegistrarProxy {
  public:
    // Throws net::BindError.
    explicit RegistrarProxy(ImsOptions options);
    ~RegistrarProxy();
    RegistrarProxy(const RegistrarProxy&) = delete;
    RegistrarProxy& operator=(const RegistrarProxy&) = delete;

    net::Endpoint endpoint() const { return endpoint_; }
    LocationStore& locations() { return db_; }
    const ImsOptions& options() const { return options_; }

    // Adds or replaces a static host entry (e.g. once the gateway's port is known).
    void set_host(const std::string& name, const net::Endpoint& ep);

    ProxyStats stats() const;
    server::QueueStats queue_stats() const { return queue_.stats(); }
    sip::TransactionCounters transaction_counters() const { return tx_->counters(); }
    enumdns::LatencyCollector& enum_latencies() { return enum_latencies_; }

  private:
    void on_readable();
    void admit(net::Datagram d, net::TimePoint now);
    void process(const sip::SipMessage& msg, const net::Endpoint& from);
    void on_invite(const sip::SipMessage& msg, const net::Endpoint& from);
    void apply_route(const sip::SipMessage& invite, const RouteDecision& decision);
    void relay_request(sip::SipMessage msg);
    void relay_response(sip::SipMessage msg);
    void send(const net::Endpoint& to, std::string_view wire);

    ImsOptions options_;
    LocationStore db_;
    net::EventLoop loop_;
    net::UdpSocket sock_;
    net::Endpoint endpoint_;
    RoutingContext ctx_;
    server::WorkQueue queue_;
    server::RateMeter meter_;
    std::unique_ptr<sip::TransactionLayer> tx_;
    std::unique_ptr<enumdns::AsyncEnumClient> enum_;
    enumdns::LatencyCollector enum_latencies_;
    // Call-ID -> where its INVITE went, for CANCEL.
    std::unordered_map<std::string, net::Endpoint> invite_targets_;

    std::atomic<std::uint64_t> received_{0}, malformed_{0}, shed_{0}, registrations_{0}, invites_{0}, forwarded_{0},
        enum_lookups_{0}, rejected_{0};
    std::atomic<bool> hard_failed_{false};
    std::unique_ptr<net::LoopThread> thread_;
};

}  // namespace voipbed::ims

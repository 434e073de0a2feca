#include "voipbed/enumdns/enum_server.h"

#include "voipbed/enumdns/dns_wire.h"
#include "voipbed/enumdns/error.h"

namespace voipbed::enumdns {

namespace {

net::UdpSocket bind_or_throw(const net::Endpoint& ep) {
    try {
        return net::UdpSocket::bind(ep);
    } catch (const net::BindError& e) {
        throw EnumError(EnumErrc::BindFailure, e.what());
    }
}

}  // namespace

EnumServer::EnumServer(std::shared_ptr<const EnumZone> zone, const net::Endpoint& bind, server::ServerProfile profile)
    : zone_(std::move(zone)),
      profile_(std::move(profile)),
      sock_(bind_or_throw(bind)),
      endpoint_(sock_.local_endpoint()),
      queue_(profile_.service_cost(), profile_.max_backlog, profile_.queue_grace()) {
    loop_.watch(sock_.fd(), [this] { on_readable(); });
    thread_ = std::make_unique<net::LoopThread>(loop_);
}

EnumServer::~EnumServer() { thread_.reset(); }

EnumServerStats EnumServer::stats() const { return {served_.load(), nxdomain_.load(), shed_.load(), malformed_.load()}; }

void EnumServer::on_readable() {
    for (int i = 0; i < 256; ++i) {
        auto d = sock_.receive();
        if (!d) return;
        handle(*d);
    }
}

void EnumServer::handle(const net::Datagram& d) {
    const auto now = net::EventLoop::now();
    DnsQuery query;
    try {
        query = decode_query(d.bytes());
    } catch (const EnumError&) {
        malformed_.fetch_add(1, std::memory_order_relaxed);
        return;
    }
    if (profile_.hard_fail_at) {
        meter_.record(now);
        if (meter_.rate(now) > *profile_.hard_fail_at) {
            shed_.fetch_add(1, std::memory_order_relaxed);
            return;
        }
    }
    auto start = queue_.admit(now);
    if (!start) {
        shed_.fetch_add(1, std::memory_order_relaxed);
        return;
    }

    Rcode rcode = Rcode::NoError;
    std::vector<NaptrRecord> answers;
    if (query.question.qclass != kClassIn) {
        rcode = Rcode::Refused;
    } else if (zone_->is_apex(query.question.name)) {
        // Apex exists but carries no NAPTR data.
    } else if (const auto* records = zone_->find_domain(query.question.name)) {
        if (query.question.qtype == kTypeNaptr) answers = *records;
    } else {
        rcode = Rcode::NxDomain;
    }
    auto wire = encode_response(query, rcode, answers);
    auto to = d.from;
    loop_.schedule_at(*start + profile_.delay_for(server::SignalKind::Query),
                      [this, wire = std::move(wire), to, rcode] {
                          sock_.send_to(to, std::span<const std::uint8_t>(wire));
                          served_.fetch_add(1, std::memory_order_relaxed);
                          if (rcode == Rcode::NxDomain) nxdomain_.fetch_add(1, std::memory_order_relaxed);
                      });
}

}  // namespace voipbed::enumdns

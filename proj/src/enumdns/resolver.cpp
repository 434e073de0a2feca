#include "voipbed/enumdns/resolver.h"

#include "voipbed/enumdns/dns_wire.h"

namespace voipbed::enumdns {

void LatencyCollector::add(net::Duration sample) {
    std::lock_guard lock(mu_);
    samples_.push_back(sample);
}

std::vector<net::Duration> LatencyCollector::samples() const {
    std::lock_guard lock(mu_);
    return samples_;
}

std::size_t LatencyCollector::size() const {
    std::lock_guard lock(mu_);
    return samples_.size();
}

namespace {

std::uint16_t random_id() {
    thread_local std::mt19937 rng{std::random_device{}()};
    return static_cast<std::uint16_t>(rng());
}

}  // namespace

EnumResolver::EnumResolver(ResolverOptions options, LatencyCollector* latencies)
    : options_(std::move(options)), latencies_(latencies) {}

std::vector<NaptrRecord> EnumResolver::lookup(std::string_view domain) const {
    auto sock = net::UdpSocket::bind(net::Endpoint{0, 0});
    const auto id = random_id();
    const auto wire = encode_query(domain, id);
    for (int attempt = 0; attempt <= options_.retries; ++attempt) {
        const auto sent = net::EventLoop::now();
        sock.send_to(options_.server, std::span<const std::uint8_t>(wire));
        const auto deadline = sent + options_.timeout;
        while (true) {
            auto left = deadline - net::EventLoop::now();
            if (left <= net::Duration::zero() || !sock.wait_readable(left)) break;
            auto d = sock.receive();
            if (!d || d->from != options_.server || message_id(d->bytes()) != id) continue;
            if (latencies_) latencies_->add(net::EventLoop::now() - sent);
            return decode_response(d->bytes(), id).answers;
        }
    }
    throw EnumError(EnumErrc::Timeout, "no answer from " + options_.server.to_string() + " after " +
                                           std::to_string(options_.retries + 1) + " attempts");
}

std::string EnumResolver::resolve(const E164Number& number) const {
    auto records = lookup(e164_to_domain(number, options_.apex));
    return uri_from_records(records, number);
}

AsyncEnumClient::AsyncEnumClient(net::EventLoop& loop, ResolverOptions options, LatencyCollector* latencies)
    : loop_(loop),
      options_(std::move(options)),
      latencies_(latencies),
      sock_(net::UdpSocket::bind(net::Endpoint{0, 0})),
      rng_(std::random_device{}()) {
    loop_.watch(sock_.fd(), [this] { on_readable(); });
}

AsyncEnumClient::~AsyncEnumClient() {
    for (auto& [id, p] : pending_) loop_.cancel(p.timer);
    loop_.unwatch(sock_.fd());
}

std::uint16_t AsyncEnumClient::fresh_id() {
    std::uint16_t id;
    do {
        id = static_cast<std::uint16_t>(rng_());
    } while (pending_.contains(id));
    return id;
}

void AsyncEnumClient::resolve(const E164Number& number, Callback done) {
    auto id = fresh_id();
    Pending p{number, encode_query(e164_to_domain(number, options_.apex), id), 0, {}, 0, std::move(done)};
    pending_.emplace(id, std::move(p));
    transmit(id);
}

void AsyncEnumClient::transmit(std::uint16_t id) {
    auto& p = pending_.at(id);
    p.sent_at = net::EventLoop::now();
    sock_.send_to(options_.server, std::span<const std::uint8_t>(p.wire));
    p.timer = loop_.schedule_after(options_.timeout, [this, id] { on_timer(id); });
}

void AsyncEnumClient::on_timer(std::uint16_t id) {
    auto it = pending_.find(id);
    if (it == pending_.end()) return;
    if (++it->second.attempt <= options_.retries) {
        transmit(id);
        return;
    }
    auto done = std::move(it->second.done);
    pending_.erase(it);
    done(EnumError(EnumErrc::Timeout, "no answer after " + std::to_string(options_.retries + 1) + " attempts"));
}

void AsyncEnumClient::on_readable() {
    while (auto d = sock_.receive()) {
        auto id = message_id(d->bytes());
        if (!id || d->from != options_.server) continue;
        auto it = pending_.find(*id);
        if (it == pending_.end()) continue;
        loop_.cancel(it->second.timer);
        auto p = std::move(it->second);
        pending_.erase(it);
        if (latencies_) latencies_->add(net::EventLoop::now() - p.sent_at);
        try {
            auto answers = decode_response(d->bytes(), *id).answers;
            p.done(uri_from_records(answers, p.number));
        } catch (const EnumError& e) {
            p.done(e);
        }
    }
}

}  // namespace voipbed::enumdns

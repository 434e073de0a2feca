#include "voipbed/ims/registrar_proxy.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <functional>

#include "voipbed/sip/signal_kind.h"
#include "voipbed/sip/uri.h"

namespace voipbed::ims {

using sip::Method;
using sip::SipMessage;

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

void decrement_max_forwards(SipMessage& msg) {
    auto mf = msg.header("Max-Forwards");
    unsigned v = 70;
    if (mf) std::from_chars(mf->data(), mf->data() + mf->size(), v);
    msg.set_header("Max-Forwards", std::to_string(v > 0 ? v - 1 : 0));
}

}  // namespace

RegistrarProxy::RegistrarProxy(ImsOptions options)
    : options_(std::move(options)),
      sock_(net::UdpSocket::bind(options_.bind)),
      endpoint_(sock_.local_endpoint()),
      queue_(options_.profile.service_cost(), options_.profile.max_backlog, options_.profile.queue_grace()) {
    ctx_.domain = lower(options_.domain);
    ctx_.self = endpoint_;
    ctx_.enum_enabled = options_.enum_enabled;
    for (const auto& [name, ep] : options_.hosts) ctx_.hosts[lower(name)] = ep;
    tx_ = std::make_unique<sip::TransactionLayer>(
        loop_, [this](const net::Endpoint& to, std::string_view wire) { send(to, wire); }, options_.timers);
    if (options_.enum_enabled && options_.resolver) {
        enum_ = std::make_unique<enumdns::AsyncEnumClient>(loop_, *options_.resolver, &enum_latencies_);
    }
    loop_.watch(sock_.fd(), [this] { on_readable(); });
    thread_ = std::make_unique<net::LoopThread>(loop_);
}

RegistrarProxy::~RegistrarProxy() {
    thread_.reset();
    enum_.reset();
    tx_.reset();
}

void RegistrarProxy::set_host(const std::string& name, const net::Endpoint& ep) {
    thread_->call([&] {
        ctx_.hosts[lower(name)] = ep;
        return 0;
    });
}

ProxyStats RegistrarProxy::stats() const {
    return {received_.load(), malformed_.load(), shed_.load(),     registrations_.load(), invites_.load(),
            forwarded_.load(), enum_lookups_.load(), rejected_.load(), hard_failed_.load()};
}

void RegistrarProxy::send(const net::Endpoint& to, std::string_view wire) { sock_.send_to(to, wire); }

void RegistrarProxy::on_readable() {
    for (int i = 0; i < 256; ++i) {
        auto d = sock_.receive();
        if (!d) return;
        admit(std::move(*d), net::EventLoop::now());
    }
}

void RegistrarProxy::admit(net::Datagram d, net::TimePoint now) {
    received_.fetch_add(1, std::memory_order_relaxed);
    if (hard_failed_) return;
    if (sip::is_keepalive(d.payload)) {
        send(d.from, "\r\n");
        return;
    }
    if (options_.profile.hard_fail_at) {
        meter_.record(now);
        if (meter_.rate(now) > *options_.profile.hard_fail_at) {
            hard_failed_ = true;
            return;
        }
    }
    SipMessage msg;
    try {
        msg = sip::parse_message(d.payload);
    } catch (const sip::SipParseError&) {
        malformed_.fetch_add(1, std::memory_order_relaxed);
        return;
    }
    const auto kind = sip::signal_kind(msg);
    // 100 Trying is absorbed here, never routed: no queue work.
    auto start = kind == server::SignalKind::Trying ? std::optional(now) : queue_.admit(now);
    if (!start) {
        shed_.fetch_add(1, std::memory_order_relaxed);
        return;
    }
    auto at = *start + options_.profile.delay_for(kind);
    loop_.schedule_at(at, [this, msg = std::move(msg), from = d.from] { process(msg, from); });
}

void RegistrarProxy::process(const SipMessage& msg, const net::Endpoint& from) {
    if (msg.is_request()) {
        switch (msg.method()) {
            case Method::Register:
                registrations_.fetch_add(1, std::memory_order_relaxed);
                send(from, sip::serialize_message(handle_register(msg, db_)));
                return;
            case Method::Invite: on_invite(msg, from); return;
            case Method::Ack:
                if (tx_->receive_request(msg, from) == sip::TransactionLayer::Inbound::Absorbed) return;
                relay_request(msg);
                return;
            default: relay_request(msg); return;
        }
    }

    auto top = sip::parse_via(msg.header("Via").value_or(""));
    if (!top || top->endpoint() != endpoint_) {
        tx_->count_unexpected();
        return;
    }
    auto cseq = msg.cseq();
    if (cseq && cseq->method == Method::Invite) {
        if (!tx_->receive_response(msg) && msg.status_code() >= 200 && msg.status_code() < 300) {
            relay_response(msg);
        }
        return;
    }
    relay_response(msg);
}

void RegistrarProxy::on_invite(const SipMessage& msg, const net::Endpoint& from) {
    if (tx_->receive_request(msg, from) == sip::TransactionLayer::Inbound::Absorbed) return;
    invites_.fetch_add(1, std::memory_order_relaxed);
    tx_->send_response(sip::make_response(msg, 100));

    auto step = classify_invite(msg, db_, ctx_);
    if (step.decision) {
        apply_route(msg, *step.decision);
        return;
    }
    if (!enum_) {
        apply_route(msg, RouteDecision::respond(500, false));
        return;
    }
    enum_lookups_.fetch_add(1, std::memory_order_relaxed);
    enum_->resolve(*step.enum_number, [this, msg](enumdns::ResolveResult r) {
        apply_route(msg, finish_with_enum(r, db_, ctx_));
    });
}

void RegistrarProxy::apply_route(const SipMessage& invite, const RouteDecision& decision) {
    if (decision.kind == RouteDecision::Kind::Respond) {
        rejected_.fetch_add(1, std::memory_order_relaxed);
        tx_->send_response(sip::make_response(invite, decision.status, "ims"));
        return;
    }
    forwarded_.fetch_add(1, std::memory_order_relaxed);
    SipMessage fwd = invite;
    fwd.set_request_uri(decision.request_uri);
    decrement_max_forwards(fwd);
    fwd.push_header("Via", sip::format_via(endpoint_, tx_->new_branch()));
    const auto call_id = invite.call_id();
    invite_targets_[call_id] = decision.target;

    sip::TransactionLayer::ClientHandlers handlers;
    handlers.on_response = [this, call_id](const SipMessage& resp) {
        const int code = resp.status_code();
        if (code == 100) return;  // hop-by-hop
        SipMessage up = resp;
        up.remove_first("Via");
        if (code < 200) {
            tx_->send_response(up);
        } else if (code < 300) {
            // 2xx retransmissions are end-to-end; pass them on even after the
            // server transaction has completed.
            if (!tx_->send_response(up, false)) relay_response(resp);
            invite_targets_.erase(call_id);
        } else {
            tx_->send_response(up, true);
            invite_targets_.erase(call_id);
        }
    };
    handlers.on_timeout = [this, invite, call_id] {
        tx_->send_response(sip::make_response(invite, 500, "ims"));
        invite_targets_.erase(call_id);
    };
    tx_->send_request(fwd, decision.target, std::move(handlers));
}

void RegistrarProxy::relay_request(SipMessage msg) {
    std::optional<net::Endpoint> target;
    if (msg.method() == Method::Cancel) {
        if (auto it = invite_targets_.find(msg.call_id()); it != invite_targets_.end()) target = it->second;
    } else if (auto uri = sip::SipUri::parse(msg.request_uri())) {
        auto decision = classify_invite(msg, db_, RoutingContext{ctx_.domain, ctx_.self, false, ctx_.hosts});
        if (decision.decision && decision.decision->kind == RouteDecision::Kind::Forward) {
            target = decision.decision->target;
        }
    }
    if (!target) {
        if (msg.method() != Method::Ack) {
            rejected_.fetch_add(1, std::memory_order_relaxed);
            auto resp = sip::make_response(msg, 404, "ims");
            if (auto via = sip::parse_via(msg.header("Via").value_or(""))) {
                if (auto ep = via->endpoint()) send(*ep, sip::serialize_message(resp));
            }
        }
        return;
    }
    // Stateless: derive the branch from the inbound one so retransmissions
    // keep matching downstream.
    auto branch = std::string(sip::kBranchCookie) + "sl" + std::to_string(std::hash<std::string>{}(msg.top_via_branch()));
    decrement_max_forwards(msg);
    msg.push_header("Via", sip::format_via(endpoint_, branch));
    send(*target, sip::serialize_message(msg));
}

void RegistrarProxy::relay_response(SipMessage msg) {
    msg.remove_first("Via");
    auto next = sip::parse_via(msg.header("Via").value_or(""));
    if (!next) return;
    if (auto ep = next->endpoint()) send(*ep, sip::serialize_message(msg));
}

}  // namespace voipbed::ims

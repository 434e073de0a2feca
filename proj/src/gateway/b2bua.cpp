#include "voipbed/gateway/b2bua.h"

#include <stdexcept>

#include "voipbed/sip/signal_kind.h"
#include "voipbed/sip/uri.h"

namespace voipbed::gateway {

using sip::Method;
using sip::SipMessage;
using Inbound = sip::TransactionLayer::Inbound;

void FxsEndpoint::validate() const {
    if (id.empty()) throw std::invalid_argument("FXS endpoint without id");
    if (ring_delay < net::Duration::zero() || answer_delay < net::Duration::zero()) {
        throw std::invalid_argument("FXS " + id + ": negative delay");
    }
    if (lines < 1) throw std::invalid_argument("FXS " + id + ": lines must be >= 1");
}

std::string_view to_string(CallState s) {
    switch (s) {
        case CallState::Setup: return "setup";
        case CallState::Ringing: return "ringing";
        case CallState::Answered: return "answered";
        case CallState::TornDown: return "torn_down";
    }
    return "?";
}

bool can_advance(CallState from, CallState to) {
    if (from == CallState::TornDown) return false;
    return static_cast<int>(to) > static_cast<int>(from);
}

GatewayB2bua::GatewayB2bua(GatewayOptions options)
    : options_(std::move(options)),
      sock_(net::UdpSocket::bind(options_.bind)),
      endpoint_(sock_.local_endpoint()),
      queue_(options_.profile.service_cost(), options_.profile.max_backlog, options_.profile.queue_grace()) {
    for (const auto& e : options_.endpoints) {
        e.validate();
        if (!endpoints_.emplace(e.id, e).second) throw std::invalid_argument("duplicate FXS endpoint " + e.id);
    }
    for (const auto& d : options_.dialplan) {
        if (d.action == DialplanEntry::Action::ToFxs && !endpoints_.contains(d.endpoint)) {
            throw std::invalid_argument("dialplan names unknown FXS endpoint " + d.endpoint);
        }
    }
    tx_ = std::make_unique<sip::TransactionLayer>(
        loop_, [this](const net::Endpoint& to, std::string_view wire) { send(to, wire); }, options_.timers);
    loop_.watch(sock_.fd(), [this] { on_readable(); });
    thread_ = std::make_unique<net::LoopThread>(loop_);
}

GatewayB2bua::~GatewayB2bua() {
    thread_.reset();
    tx_.reset();
}

GatewayStats GatewayB2bua::stats() const {
    return {received_.load(), malformed_.load(), shed_.load(),   invites_.load(),   ringing_.load(),
            answered_.load(), busy_.load(),      not_found_.load(), torn_down_.load(), hard_failed_.load()};
}

std::vector<CallSnapshot> GatewayB2bua::snapshot() {
    return thread_->call([this] {
        std::vector<CallSnapshot> out;
        for (const auto& [id, c] : calls_) out.push_back({id, c.fxs_id, c.state, c.leg_a_up, c.leg_b_up});
        return out;
    });
}

int GatewayB2bua::lines_in_use(const std::string& fxs_id) {
    return thread_->call([&] {
        auto it = busy_lines_.find(fxs_id);
        return it == busy_lines_.end() ? 0 : it->second;
    });
}

void GatewayB2bua::send(const net::Endpoint& to, std::string_view wire) { sock_.send_to(to, wire); }

void GatewayB2bua::on_readable() {
    for (int i = 0; i < 256; ++i) {
        auto d = sock_.receive();
        if (!d) return;
        admit(std::move(*d), net::EventLoop::now());
    }
}

void GatewayB2bua::admit(net::Datagram d, net::TimePoint now) {
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
    auto start = queue_.admit(now);
    if (!start) {
        shed_.fetch_add(1, std::memory_order_relaxed);
        return;
    }
    // Trying goes out on admission; the dialplan work happens after the
    // INVITE delay.
    if (msg.is_request() && msg.method() == Method::Invite) {
        if (tx_->receive_request(msg, d.from) == Inbound::Absorbed) return;
        tx_->send_response(sip::make_response(msg, 100));
        auto at = *start + options_.profile.delay_for(server::SignalKind::Invite);
        loop_.schedule_at(at, [this, msg = std::move(msg), from = d.from] { on_invite(msg, from); });
        return;
    }
    auto at = *start + options_.profile.delay_for(sip::signal_kind(msg));
    loop_.schedule_at(at, [this, msg = std::move(msg), from = d.from] { process(msg, from); });
}

void GatewayB2bua::process(const SipMessage& msg, const net::Endpoint& from) {
    if (msg.is_response()) {
        tx_->receive_response(msg);
        return;
    }
    switch (msg.method()) {
        case Method::Ack: tx_->receive_request(msg, from); return;
        case Method::Bye: on_bye(msg, from); return;
        case Method::Cancel: on_cancel(msg, from); return;
        default:
            if (tx_->receive_request(msg, from) == Inbound::NewRequest) {
                tx_->send_response(sip::make_response(msg, 501, "gw"));
            }
            return;
    }
}

SipMessage GatewayB2bua::response_for(const BridgedCall& call, int code) const {
    auto resp = sip::make_response(call.invite, code, call.local_tag);
    if (code >= 180 && code < 300) {
        sip::SipUri contact;
        if (auto ruri = sip::SipUri::parse(call.invite.request_uri())) contact.user = ruri->user;
        contact.host = endpoint_.host();
        contact.port = endpoint_.port;
        resp.add_header("Contact", "<" + contact.to_string() + ">");
    }
    return resp;
}

void GatewayB2bua::on_invite(const SipMessage& msg, const net::Endpoint& from) {
    invites_.fetch_add(1, std::memory_order_relaxed);
    const auto call_id = msg.call_id();
    auto ruri = sip::SipUri::parse(msg.request_uri());
    auto entry = ruri ? match_dialplan(ruri->user, options_.dialplan) : std::nullopt;
    if (!entry || entry->action == DialplanEntry::Action::Reject) {
        not_found_.fetch_add(1, std::memory_order_relaxed);
        tx_->send_response(sip::make_response(msg, 404, "gw"));
        return;
    }
    if (calls_.contains(call_id)) {
        // Same Call-ID with a new branch; treat as a loop rather than a second call.
        tx_->send_response(sip::make_response(msg, 482, "gw"));
        return;
    }
    const auto& fxs = endpoints_.at(entry->endpoint);
    int& used = busy_lines_[fxs.id];
    if (used >= fxs.lines) {
        busy_.fetch_add(1, std::memory_order_relaxed);
        tx_->send_response(sip::make_response(msg, 486, "gw"));
        return;
    }
    ++used;

    BridgedCall call;
    call.call_id = call_id;
    call.invite = msg;
    call.source = from;
    call.local_tag = "gw" + std::to_string(++tag_seq_);
    call.fxs_id = fxs.id;
    call.timer = loop_.schedule_after(fxs.ring_delay + options_.profile.delay_for(server::SignalKind::Ringing),
                                      [this, call_id] { ring(call_id); });
    calls_.emplace(call_id, std::move(call));
}

void GatewayB2bua::ring(const std::string& call_id) {
    auto it = calls_.find(call_id);
    if (it == calls_.end() || !can_advance(it->second.state, CallState::Ringing)) return;
    auto& call = it->second;
    call.state = CallState::Ringing;
    ringing_.fetch_add(1, std::memory_order_relaxed);
    tx_->send_response(response_for(call, 180));
    const auto& fxs = endpoints_.at(call.fxs_id);
    call.timer = loop_.schedule_after(fxs.answer_delay + options_.profile.delay_for(server::SignalKind::Ok),
                                      [this, call_id] { answer(call_id); });
}

void GatewayB2bua::answer(const std::string& call_id) {
    auto it = calls_.find(call_id);
    if (it == calls_.end() || !can_advance(it->second.state, CallState::Answered)) return;
    auto& call = it->second;
    call.timer = 0;
    call.state = CallState::Answered;
    answered_.fetch_add(1, std::memory_order_relaxed);
    tx_->send_response(response_for(call, 200), true);
}

void GatewayB2bua::tear_down(BridgedCall& call) {
    if (call.state == CallState::TornDown) return;
    if (call.timer) loop_.cancel(call.timer);
    call.timer = 0;
    call.state = CallState::TornDown;
    call.leg_a_up = false;
    call.leg_b_up = false;
    if (auto it = busy_lines_.find(call.fxs_id); it != busy_lines_.end() && it->second > 0) --it->second;
    torn_down_.fetch_add(1, std::memory_order_relaxed);
    loop_.schedule_after(options_.keep_finished, [this, id = call.call_id] {
        auto it = calls_.find(id);
        if (it != calls_.end() && it->second.state == CallState::TornDown) calls_.erase(it);
    });
}

void GatewayB2bua::on_bye(const SipMessage& msg, const net::Endpoint& from) {
    if (tx_->receive_request(msg, from) == Inbound::Absorbed) return;
    auto it = calls_.find(msg.call_id());
    if (it == calls_.end() || it->second.state == CallState::TornDown) {
        tx_->send_response(sip::make_response(msg, 481, "gw"));
        return;
    }
    tear_down(it->second);
    tx_->send_response(sip::make_response(msg, 200));
}

void GatewayB2bua::on_cancel(const SipMessage& msg, const net::Endpoint& from) {
    if (tx_->receive_request(msg, from) == Inbound::Absorbed) return;
    auto it = calls_.find(msg.call_id());
    if (it == calls_.end()) {
        tx_->send_response(sip::make_response(msg, 481, "gw"));
        return;
    }
    tx_->send_response(sip::make_response(msg, 200));
    auto& call = it->second;
    if (call.state == CallState::Setup || call.state == CallState::Ringing) {
        tear_down(call);
        tx_->send_response(response_for(call, 487), true);
    }
}

bool GatewayB2bua::hangup_from_fxs(const std::string& call_id) {
    return thread_->call([&] {
        auto it = calls_.find(call_id);
        if (it == calls_.end() || it->second.state != CallState::Answered) return false;
        auto& call = it->second;
        const auto& inv = call.invite;

        std::string target_uri(sip::addr_spec(inv.header("Contact").value_or(inv.header("From").value_or(""))));
        auto target = call.source;
        if (auto uri = sip::SipUri::parse(target_uri)) {
            if (auto lit = uri->literal_endpoint()) target = *lit;
        }
        auto bye = SipMessage::request(Method::Bye, target_uri);
        bye.add_header("Via", sip::format_via(endpoint_, tx_->new_branch()));
        bye.add_header("Max-Forwards", "70");
        bye.add_header("From", std::string(inv.header("To").value_or("")) + ";tag=" + call.local_tag);
        bye.add_header("To", std::string(inv.header("From").value_or("")));
        bye.add_header("Call-ID", call.call_id);
        bye.add_header("CSeq", std::to_string(bye_cseq_++) + " BYE");
        tear_down(call);
        tx_->send_request(bye, target, {});
        return true;
    });
}

}  // namespace voipbed::gateway

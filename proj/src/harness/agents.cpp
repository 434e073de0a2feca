#include "voipbed/harness/agents.h"

#include "voipbed/sip/uri.h"

namespace voipbed::harness {

using sip::Method;
using sip::SipMessage;
using Inbound = sip::TransactionLayer::Inbound;

RegistrationFailed::RegistrationFailed(std::string aor)
    : std::runtime_error("RegistrationFailed: " + aor), aor_(std::move(aor)) {}

// ---- UAS -------------------------------------------------------------------

UasPool::UasPool(sip::TxTimers timers)
    : sock_(net::UdpSocket::bind(net::Endpoint::loopback(0))), endpoint_(sock_.local_endpoint()) {
    tx_ = std::make_unique<sip::TransactionLayer>(
        loop_, [this](const net::Endpoint& to, std::string_view w) { sock_.send_to(to, w); }, timers);
    loop_.watch(sock_.fd(), [this] {
        while (auto d = sock_.receive()) {
            try {
                on_message(sip::parse_message(d->payload), d->from);
            } catch (const sip::SipParseError&) {
            }
        }
    });
    thread_ = std::make_unique<net::LoopThread>(loop_);
}

UasPool::~UasPool() {
    thread_.reset();
    tx_.reset();
}

void UasPool::register_user(const std::string& user, const std::string& domain, const net::Endpoint& registrar,
                            net::Duration timeout, int attempts) {
    auto sock = net::UdpSocket::bind(net::Endpoint::loopback(0));
    auto reg = SipMessage::request(Method::Register, "sip:" + domain);
    reg.add_header("Via", sip::format_via(sock.local_endpoint(), "z9hG4bKreg-" + user));
    reg.add_header("Max-Forwards", "70");
    reg.add_header("From", "<sip:" + user + "@" + domain + ">;tag=reg");
    reg.add_header("To", "<sip:" + user + "@" + domain + ">");
    reg.add_header("Call-ID", "reg-" + user + "-" + endpoint_.to_string());
    reg.add_header("CSeq", "1 REGISTER");
    reg.add_header("Contact", "<sip:" + user + "@" + endpoint_.to_string() + ">");
    reg.add_header("Expires", "3600");
    const auto wire = sip::serialize_message(reg);
    for (int i = 0; i < attempts; ++i) {
        sock.send_to(registrar, wire);
        auto deadline = net::EventLoop::now() + timeout;
        while (net::EventLoop::now() < deadline) {
            if (!sock.wait_readable(std::chrono::duration_cast<std::chrono::milliseconds>(deadline - net::EventLoop::now()))) {
                break;
            }
            auto d = sock.receive();
            if (!d) continue;
            try {
                auto resp = sip::parse_message(d->payload);
                if (!resp.is_response() || resp.status_code() < 200) continue;
                if (resp.status_code() >= 300) throw RegistrationFailed(user + "@" + domain);
                users_.push_back(user);
                return;
            } catch (const sip::SipParseError&) {
            }
        }
    }
    throw RegistrationFailed(user + "@" + domain);
}

void UasPool::on_message(const SipMessage& msg, const net::Endpoint& from) {
    if (msg.is_response()) {
        tx_->receive_response(msg);
        return;
    }
    if (tx_->receive_request(msg, from) == Inbound::Absorbed) return;
    switch (msg.method()) {
        case Method::Invite: {
            invites_.fetch_add(1, std::memory_order_relaxed);
            const auto tag = "uas" + std::to_string(++tag_seq_);
            tx_->send_response(sip::make_response(msg, 180, tag));
            auto ok = sip::make_response(msg, 200, tag);
            std::string user = "uas";
            if (auto uri = sip::SipUri::parse(msg.request_uri())) user = uri->user;
            ok.add_header("Contact", "<sip:" + user + "@" + endpoint_.to_string() + ">");
            tx_->send_response(ok, true);
            return;
        }
        case Method::Bye:
            byes_.fetch_add(1, std::memory_order_relaxed);
            tx_->send_response(sip::make_response(msg, 200));
            return;
        case Method::Ack: return;
        case Method::Cancel: tx_->send_response(sip::make_response(msg, 200)); return;
        default: tx_->send_response(sip::make_response(msg, 501)); return;
    }
}

std::unique_ptr<UasPool> register_pool(int count, const net::Endpoint& registrar, const std::string& domain,
                                       sip::TxTimers timers) {
    auto pool = std::make_unique<UasPool>(timers);
    for (int i = 1; i <= count; ++i) pool->register_user("uas" + std::to_string(i), domain, registrar);
    return pool;
}

// ---- UAC -------------------------------------------------------------------

UacPool::UacPool(UacConfig config)
    : config_(std::move(config)),
      sock_(net::UdpSocket::bind(net::Endpoint::loopback(0))),
      endpoint_(sock_.local_endpoint()) {
    tx_ = std::make_unique<sip::TransactionLayer>(
        loop_, [this](const net::Endpoint& to, std::string_view w) { sock_.send_to(to, w); }, config_.timers);
    loop_.watch(sock_.fd(), [this] { on_readable(); });
    thread_ = std::make_unique<net::LoopThread>(loop_);
}

UacPool::~UacPool() {
    thread_.reset();
    tx_.reset();
}

void UacPool::schedule_call(net::TimePoint when, std::string request_uri, bool probe) {
    loop_.post([this, when, uri = std::move(request_uri), probe] {
        ++scheduled_;
        loop_.schedule_at(when, [this, uri, probe] {
            --scheduled_;
            if (!aborted_) start_call(uri, probe);
        });
    });
}

std::size_t UacPool::active() {
    return thread_->call([this] { return calls_.size(); });
}

std::size_t UacPool::scheduled() {
    return thread_->call([this] { return scheduled_; });
}

void UacPool::on_readable() {
    for (int i = 0; i < 256; ++i) {
        auto d = sock_.receive();
        if (!d) return;
        SipMessage msg;
        try {
            msg = sip::parse_message(d->payload);
        } catch (const sip::SipParseError&) {
            ++stray_;
            continue;
        }
        if (config_.endpoint_delay <= net::Duration::zero()) {
            dispatch(msg, d->from);
        } else {
            loop_.schedule_after(config_.endpoint_delay, [this, msg = std::move(msg), from = d->from] { dispatch(msg, from); });
        }
    }
}

void UacPool::dispatch(const SipMessage& msg, const net::Endpoint& from) {
    if (msg.is_response()) {
        tx_->receive_response(msg);
        return;
    }
    if (tx_->receive_request(msg, from) == Inbound::Absorbed) return;
    if (msg.method() == Method::Bye) {
        tx_->send_response(sip::make_response(msg, 200));
        if (calls_.contains(msg.call_id())) close_call(msg.call_id(), false);
        return;
    }
    if (msg.method() != Method::Ack) ++stray_;
}

void UacPool::start_call(const std::string& request_uri, bool probe) {
    const auto n = ++call_seq_;
    const auto call_id = "uac" + std::to_string(n) + "@" + endpoint_.to_string();
    auto inv = SipMessage::request(Method::Invite, request_uri);
    inv.add_header("Via", sip::format_via(endpoint_, tx_->new_branch()));
    inv.add_header("Max-Forwards", "70");
    inv.add_header("From", "<sip:uac@" + config_.domain + ">;tag=c" + std::to_string(n));
    inv.add_header("To", "<" + request_uri + ">");
    inv.add_header("Call-ID", call_id);
    inv.add_header("CSeq", "1 INVITE");
    inv.add_header("Contact", "<sip:uac@" + endpoint_.to_string() + ">");

    Call call;
    call.rec.call_id = call_id;
    call.probe = probe;
    call.invite = inv;
    if (probe) {
        probe_order_.push_back(call_id);
    } else {
        ++background_started_;
    }
    auto& stored = calls_.emplace(call_id, std::move(call)).first->second;
    stored.rec.t_invite_sent = net::EventLoop::now();

    sip::TransactionLayer::ClientHandlers h;
    h.on_response = [this, call_id](const SipMessage& r) { on_invite_response(call_id, r); };
    h.on_timeout = [this, call_id] { close_call(call_id, true); };
    h.on_retransmit = [this, call_id] {
        if (auto it = calls_.find(call_id); it != calls_.end()) ++it->second.rec.retransmissions;
    };
    tx_->send_request(inv, config_.first_hop, std::move(h));
}

void UacPool::on_invite_response(const std::string& call_id, const SipMessage& resp) {
    auto it = calls_.find(call_id);
    if (it == calls_.end()) {
        // 2xx retransmission after the call closed: ACK it again if we can.
        return;
    }
    auto& call = it->second;
    const int code = resp.status_code();
    const auto now = net::EventLoop::now();
    if (code == 180 || code == 183) {
        if (!call.rec.t_180_received) call.rec.t_180_received = now;
        return;
    }
    if (code < 200) return;
    call.rec.final_status = code;
    if (code >= 300) {
        close_call(call_id, false);
        return;
    }
    if (!call.ack_wire.empty()) {
        sock_.send_to(config_.first_hop, call.ack_wire);
        return;
    }
    call.rec.t_200_received = now;
    call.remote_to = std::string(resp.header("To").value_or(""));
    call.remote_uri = std::string(sip::addr_spec(resp.header("Contact").value_or("")));
    if (call.remote_uri.empty()) call.remote_uri = call.invite.request_uri();

    auto ack = SipMessage::request(Method::Ack, call.remote_uri);
    ack.add_header("Via", sip::format_via(endpoint_, tx_->new_branch()));
    ack.add_header("Max-Forwards", "70");
    ack.add_header("From", std::string(call.invite.header("From").value_or("")));
    ack.add_header("To", call.remote_to);
    ack.add_header("Call-ID", call_id);
    ack.add_header("CSeq", "1 ACK");
    call.ack_wire = sip::serialize_message(ack);
    sock_.send_to(config_.first_hop, call.ack_wire);

    auto hold = call.probe ? net::Duration::zero() : config_.hold;
    loop_.schedule_after(hold, [this, call_id] { send_bye(call_id); });
}

void UacPool::send_bye(const std::string& call_id) {
    auto it = calls_.find(call_id);
    if (it == calls_.end() || it->second.bye_sent) return;
    auto& call = it->second;
    call.bye_sent = true;
    auto bye = SipMessage::request(Method::Bye, call.remote_uri);
    bye.add_header("Via", sip::format_via(endpoint_, tx_->new_branch()));
    bye.add_header("Max-Forwards", "70");
    bye.add_header("From", std::string(call.invite.header("From").value_or("")));
    bye.add_header("To", call.remote_to);
    bye.add_header("Call-ID", call_id);
    bye.add_header("CSeq", "2 BYE");
    sip::TransactionLayer::ClientHandlers h;
    h.on_response = [this, call_id](const SipMessage& r) {
        if (r.status_code() >= 200) close_call(call_id, false);
    };
    // The INVITE already rang; a lost BYE is counted by the layer but does
    // not change the call's outcome.
    h.on_timeout = [this, call_id] { close_call(call_id, false); };
    tx_->send_request(bye, config_.first_hop, std::move(h));
}

void UacPool::close_call(const std::string& call_id, bool timed_out) {
    auto it = calls_.find(call_id);
    if (it == calls_.end()) return;
    auto& call = it->second;
    auto& rec = call.rec;
    if (rec.t_180_received) {
        rec.outcome = Outcome::RingingOk;
    } else if (timed_out) {
        rec.outcome = Outcome::Timeout;
    } else if (rec.final_status >= 300) {
        rec.outcome = Outcome::Rejected;
    } else {
        rec.outcome = Outcome::Unexpected;  // answered without ringing
    }
    if (timed_out && !rec.t_180_received) {
        if (++consecutive_timeouts_ >= config_.abort_after_timeouts) aborted_ = true;
    } else if (!timed_out) {
        consecutive_timeouts_ = 0;
    }
    if (call.probe) {
        done_probes_.push_back(rec);
    } else {
        ++background_completed_;
    }
    calls_.erase(it);
}

UacResults UacPool::finish() {
    return thread_->call([this] {
        aborted_ = aborted_.load();
        std::vector<std::string> open;
        for (const auto& [id, c] : calls_) open.push_back(id);
        for (const auto& id : open) {
            auto& rec = calls_.at(id).rec;
            if (!rec.t_180_received && rec.final_status == 0) ++forced_timeouts_;
            close_call(id, rec.final_status == 0);
        }
        UacResults out;
        // Records in the order the probes were placed.
        std::unordered_map<std::string, CallRecord> by_id;
        for (auto& r : done_probes_) by_id.emplace(r.call_id, r);
        for (const auto& id : probe_order_) {
            if (auto it = by_id.find(id); it != by_id.end()) out.records.push_back(it->second);
        }
        auto c = tx_->counters();
        out.counters.retrans = c.retransmissions;
        out.counters.timeout = c.timeouts + forced_timeouts_;
        out.counters.unexpected_msg = c.unexpected + stray_;
        out.background_started = background_started_;
        out.background_completed = background_completed_;
        out.aborted = aborted_;
        return out;
    });
}

}  // namespace voipbed::harness

#include "voipbed/sip/transaction_layer.h"

#include <algorithm>
#include <random>

#include "voipbed/sip/uri.h"

namespace voipbed::sip {

namespace {

std::string tx_key(std::string_view branch, Method method) {
    if (method == Method::Ack) method = Method::Invite;
    return std::string(branch) + ":" + std::string(to_string(method));
}

std::string dialog_key(const SipMessage& msg) {
    auto cseq = msg.cseq();
    return msg.call_id() + "/" + std::to_string(cseq ? cseq->number : 0);
}

bool has(const std::vector<TxAction>& actions, TxAction a) {
    return std::find(actions.begin(), actions.end(), a) != actions.end();
}

std::string make_branch_prefix() {
    std::random_device rd;
    std::uniform_int_distribution<std::uint32_t> dist;
    char buf[16];
    std::snprintf(buf, sizeof buf, "%08x", dist(rd));
    return std::string(kBranchCookie) + buf + ".";
}

}  // namespace

TransactionLayer::TransactionLayer(net::EventLoop& loop, SendFn send, TxTimers timers)
    : loop_(loop), send_(std::move(send)), timers_(timers), branch_prefix_(make_branch_prefix()) {}

TransactionLayer::~TransactionLayer() {
    for (auto& [key, tx] : clients_) loop_.cancel(tx.timer);
    for (auto& [key, tx] : servers_) loop_.cancel(tx.timer);
}

std::string TransactionLayer::new_branch() { return branch_prefix_ + std::to_string(++branch_seq_); }

TransactionCounters TransactionLayer::counters() const {
    return {retransmissions_.load(), timeouts_.load(), unexpected_.load()};
}

void TransactionLayer::arm_client(const std::string& key, Duration after) {
    auto& tx = clients_.at(key);
    loop_.cancel(tx.timer);
    tx.timer = loop_.schedule_after(after, [this, key] { on_client_timer(key); });
}

void TransactionLayer::arm_server(const std::string& key, Duration after) {
    auto& tx = servers_.at(key);
    loop_.cancel(tx.timer);
    tx.timer = loop_.schedule_after(after, [this, key] { on_server_timer(key); });
}

void TransactionLayer::send_request(const SipMessage& request, const net::Endpoint& dest, ClientHandlers handlers) {
    auto branch = request.top_via_branch();
    auto key = tx_key(branch, request.method());
    ClientTx tx;
    tx.state = TransactionState{TxRole::Client, TxStateKind::Calling, 0, branch, false};
    tx.request = request;
    tx.wire = serialize_message(request);
    tx.dest = dest;
    tx.handlers = std::move(handlers);
    tx.invite = request.method() == Method::Invite;

    auto outcome = transaction_event(tx.state, TxEvent::send(), timers_);
    tx.state = outcome.state;
    if (auto old = clients_.find(key); old != clients_.end()) loop_.cancel(old->second.timer);
    auto& stored = clients_.insert_or_assign(key, std::move(tx)).first->second;
    if (has(outcome.actions, TxAction::Transmit)) send_(stored.dest, stored.wire);
    arm_client(key, next_retransmit_interval(0, timers_));
}

void TransactionLayer::on_client_timer(const std::string& key) {
    auto it = clients_.find(key);
    if (it == clients_.end()) return;
    auto& tx = it->second;
    tx.timer = 0;
    auto outcome = transaction_event(tx.state, TxEvent::timer_fired(), timers_);
    tx.state = outcome.state;
    if (has(outcome.actions, TxAction::Retransmit)) {
        retransmissions_.fetch_add(1, std::memory_order_relaxed);
        send_(tx.dest, tx.wire);
        if (tx.handlers.on_retransmit) tx.handlers.on_retransmit();
    }
    if (tx.state.machine_state == TxStateKind::Terminated) {
        auto handlers = std::move(tx.handlers);
        bool timed_out = has(outcome.actions, TxAction::EmitTimeout);
        clients_.erase(it);
        if (timed_out) {
            timeouts_.fetch_add(1, std::memory_order_relaxed);
            if (handlers.on_timeout) handlers.on_timeout();
        }
        return;
    }
    arm_client(key, next_retransmit_interval(tx.state.retransmit_attempt, timers_));
}

std::string TransactionLayer::build_ack(const SipMessage& request, const SipMessage& response) {
    auto ack = SipMessage::request(Method::Ack, request.request_uri());
    if (auto via = request.header("Via")) ack.add_header("Via", std::string(*via));
    if (auto mf = request.header("Max-Forwards")) ack.add_header("Max-Forwards", std::string(*mf));
    if (auto from = request.header("From")) ack.add_header("From", std::string(*from));
    if (auto to = response.header("To")) ack.add_header("To", std::string(*to));
    ack.add_header("Call-ID", request.call_id());
    auto cseq = request.cseq();
    ack.add_header("CSeq", std::to_string(cseq ? cseq->number : 1) + " ACK");
    return serialize_message(ack);
}

bool TransactionLayer::receive_response(const SipMessage& response) {
    auto cseq = response.cseq();
    auto key = tx_key(response.top_via_branch(), cseq ? cseq->method : Method::Unknown);
    auto it = clients_.find(key);
    if (it == clients_.end()) {
        unexpected_.fetch_add(1, std::memory_order_relaxed);
        return false;
    }
    auto& tx = it->second;
    const auto before = tx.state.machine_state;
    const int code = response.status_code();
    auto outcome = transaction_event(tx.state, TxEvent::response_received(code), timers_);
    tx.state = outcome.state;

    bool deliver = has(outcome.actions, TxAction::DeliverToApplication);
    const bool entered_completed = before != TxStateKind::Completed && tx.state.machine_state == TxStateKind::Completed;
    if (tx.invite && code >= 300) {
        // Non-2xx finals are acknowledged hop-by-hop by the transaction itself.
        if (tx.ack_wire.empty()) tx.ack_wire = build_ack(tx.request, response);
        send_(tx.dest, tx.ack_wire);
        deliver = deliver && entered_completed;
    } else if (before == TxStateKind::Completed && !(tx.invite && code < 300 && code >= 200)) {
        deliver = false;
    }
    if (entered_completed) arm_client(key, timers_.linger);

    auto handler = tx.handlers.on_response;
    if (deliver && handler) handler(response);
    return true;
}

TransactionLayer::Inbound TransactionLayer::receive_request(const SipMessage& request, const net::Endpoint& from) {
    auto branch = request.top_via_branch();
    if (branch.empty()) branch = "nobranch/" + dialog_key(request);

    if (request.method() == Method::Ack) {
        auto it = servers_.find(tx_key(branch, Method::Invite));
        if (it != servers_.end()) {
            auto outcome = transaction_event(it->second.state, TxEvent::ack_received(), timers_);
            it->second.state = outcome.state;
            if (outcome.state.machine_state == TxStateKind::Terminated) erase_server(it->first);
            return Inbound::Absorbed;
        }
        if (auto d = invite_by_dialog_.find(dialog_key(request)); d != invite_by_dialog_.end()) {
            auto sit = servers_.find(d->second);
            if (sit != servers_.end() && sit->second.state.awaits_ack &&
                sit->second.state.machine_state == TxStateKind::Completed) {
                auto outcome = transaction_event(sit->second.state, TxEvent::ack_received(), timers_);
                sit->second.state = outcome.state;
                if (outcome.state.machine_state == TxStateKind::Terminated) erase_server(sit->first);
            }
        }
        return Inbound::NewRequest;
    }

    auto key = tx_key(branch, request.method());
    if (auto it = servers_.find(key); it != servers_.end()) {
        auto outcome = transaction_event(it->second.state, TxEvent::request_retransmission(), timers_);
        it->second.state = outcome.state;
        if (has(outcome.actions, TxAction::Retransmit) && !it->second.last_response.empty()) {
            send_(it->second.source, it->second.last_response);
        }
        return Inbound::Absorbed;
    }

    ServerTx tx;
    tx.state = TransactionState{TxRole::Server, TxStateKind::Calling, 0, branch, false};
    tx.source = from;
    tx.invite = request.method() == Method::Invite;
    tx.dialog_key = dialog_key(request);
    if (tx.invite) invite_by_dialog_[tx.dialog_key] = key;
    servers_.emplace(key, std::move(tx));
    return Inbound::NewRequest;
}

bool TransactionLayer::send_response(const SipMessage& response, bool retransmit_final) {
    auto cseq = response.cseq();
    auto branch = response.top_via_branch();
    if (branch.empty()) branch = "nobranch/" + dialog_key(response);
    auto key = tx_key(branch, cseq ? cseq->method : Method::Unknown);
    auto it = servers_.find(key);
    if (it == servers_.end()) return false;
    auto& tx = it->second;
    const int code = response.status_code();
    if (code >= 200 && tx.invite && tx.state.machine_state != TxStateKind::Completed) {
        tx.state.awaits_ack = retransmit_final;
    }

    auto outcome = transaction_event(tx.state, TxEvent::send(code), timers_);
    tx.state = outcome.state;
    if (!has(outcome.actions, TxAction::Transmit)) return false;
    tx.last_response = serialize_message(response);
    send_(tx.source, tx.last_response);
    if (tx.state.machine_state == TxStateKind::Completed) {
        arm_server(key, tx.state.awaits_ack ? next_retransmit_interval(0, timers_) : timers_.linger);
    }
    return true;
}

void TransactionLayer::on_server_timer(const std::string& key) {
    auto it = servers_.find(key);
    if (it == servers_.end()) return;
    auto& tx = it->second;
    tx.timer = 0;
    auto outcome = transaction_event(tx.state, TxEvent::timer_fired(), timers_);
    tx.state = outcome.state;
    if (has(outcome.actions, TxAction::Retransmit)) {
        retransmissions_.fetch_add(1, std::memory_order_relaxed);
        send_(tx.source, tx.last_response);
    }
    if (has(outcome.actions, TxAction::EmitTimeout)) timeouts_.fetch_add(1, std::memory_order_relaxed);
    if (tx.state.machine_state == TxStateKind::Terminated) {
        erase_server(key);
        return;
    }
    arm_server(key, next_retransmit_interval(tx.state.retransmit_attempt, timers_));
}

void TransactionLayer::erase_server(const std::string& key) {
    auto it = servers_.find(key);
    if (it == servers_.end()) return;
    loop_.cancel(it->second.timer);
    if (it->second.invite) {
        auto d = invite_by_dialog_.find(it->second.dialog_key);
        if (d != invite_by_dialog_.end() && d->second == key) invite_by_dialog_.erase(d);
    }
    servers_.erase(it);
}

}  // namespace voipbed::sip

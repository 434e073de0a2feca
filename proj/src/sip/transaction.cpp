#include "voipbed/sip/transaction.h"

#include <algorithm>

namespace voipbed::sip {

Duration next_retransmit_interval(int attempt, const TxTimers& timers) {
    auto interval = timers.t1;
    for (int i = 0; i < attempt && interval < timers.t2; ++i) interval *= 2;
    return std::min(interval, timers.t2);
}

std::string_view to_string(TxStateKind s) {
    switch (s) {
        case TxStateKind::Calling: return "calling";
        case TxStateKind::Proceeding: return "proceeding";
        case TxStateKind::Completed: return "completed";
        case TxStateKind::Terminated: return "terminated";
    }
    return "?";
}

namespace {

using A = TxAction;
using S = TxStateKind;

TxOutcome stay(const TransactionState& s, std::vector<TxAction> actions = {}) { return {s, std::move(actions)}; }

TxOutcome move_to(TransactionState s, S next, std::vector<TxAction> actions = {}) {
    s.machine_state = next;
    return {std::move(s), std::move(actions)};
}

TxOutcome client_event(const TransactionState& s, TxEvent ev, const TxTimers& timers) {
    const bool provisional = ev.code >= 100 && ev.code < 200;
    switch (ev.kind) {
        case TxEventKind::Send:
            if (s.machine_state == S::Calling && s.retransmit_attempt == 0) return stay(s, {A::Transmit});
            return stay(s);
        case TxEventKind::TimerFired:
            if (s.machine_state == S::Completed) return move_to(s, S::Terminated);
            if (s.retransmit_attempt >= timers.max_attempts) return move_to(s, S::Terminated, {A::EmitTimeout});
            {
                auto next = s;
                ++next.retransmit_attempt;
                if (s.machine_state == S::Calling) return stay(next, {A::Retransmit});
                return stay(next);
            }
        case TxEventKind::ResponseReceived:
            if (s.machine_state == S::Completed) return stay(s, {A::DeliverToApplication});
            return move_to(s, provisional ? S::Proceeding : S::Completed, {A::DeliverToApplication});
        case TxEventKind::RequestRetransmission:
        case TxEventKind::AckReceived: return stay(s, {A::CountUnexpected});
    }
    return stay(s);
}

TxOutcome server_event(const TransactionState& s, TxEvent ev, const TxTimers& timers) {
    const bool provisional = ev.code >= 100 && ev.code < 200;
    switch (ev.kind) {
        case TxEventKind::Send:
            if (s.machine_state == S::Completed) return stay(s);
            return move_to(s, provisional ? S::Proceeding : S::Completed, {A::Transmit});
        case TxEventKind::RequestRetransmission:
            if (s.machine_state == S::Calling) return stay(s);
            return stay(s, {A::Retransmit});
        case TxEventKind::TimerFired:
            if (s.machine_state != S::Completed) return stay(s);
            if (!s.awaits_ack) return move_to(s, S::Terminated);
            if (s.retransmit_attempt >= timers.max_attempts) return move_to(s, S::Terminated, {A::EmitTimeout});
            {
                auto next = s;
                ++next.retransmit_attempt;
                return stay(next, {A::Retransmit});
            }
        case TxEventKind::AckReceived:
            if (s.machine_state == S::Completed && s.awaits_ack) return move_to(s, S::Terminated);
            return stay(s, {A::CountUnexpected});
        case TxEventKind::ResponseReceived: return stay(s, {A::CountUnexpected});
    }
    return stay(s);
}

}  // namespace

TxOutcome transaction_event(const TransactionState& state, TxEvent event, const TxTimers& timers) {
    if (state.machine_state == S::Terminated) throw EventAfterTermination();
    return state.role == TxRole::Client ? client_event(state, event, timers) : server_event(state, event, timers);
}

}  // namespace voipbed::sip

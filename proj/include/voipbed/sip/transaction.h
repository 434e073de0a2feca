#pragma once

#include <chrono>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "voipbed/net/event_loop.h"

namespace voipbed::sip {

using net::Duration;

// Retransmission timers. Defaults are the conventional T1/T2 values.
struct TxTimers {
    Duration t1 = std::chrono::milliseconds(500);
    Duration t2 = std::chrono::seconds(4);
    int max_attempts = 7;
    // How long a completed transaction lingers to absorb retransmissions.
    Duration linger = std::chrono::seconds(5);
};

// T1 * 2^attempt, capped at T2.
Duration next_retransmit_interval(int attempt, const TxTimers& timers = {});

enum class TxRole { Client, Server };
enum class TxStateKind { Calling, Proceeding, Completed, Terminated };

std::string_view to_string(TxStateKind s);

struct TransactionState {
    TxRole role = TxRole::Client;
    TxStateKind machine_state = TxStateKind::Calling;
    // Timer expiries consumed so far; equals the retransmission count while
    // a client is still Calling.
    int retransmit_attempt = 0;
    std::string branch_id;
    // Server only: a final response is retransmitted until ACK arrives
    // (INVITE answered by a UA core, or a non-2xx final from a proxy).
    bool awaits_ack = false;

    bool operator==(const TransactionState&) const = default;
};

enum class TxEventKind { Send, TimerFired, ResponseReceived, RequestRetransmission, AckReceived };

struct TxEvent {
    TxEventKind kind;
    int code = 0;  // status code for ResponseReceived, and for Send on the server side

    static TxEvent send(int code = 0) { return {TxEventKind::Send, code}; }
    static TxEvent timer_fired() { return {TxEventKind::TimerFired, 0}; }
    static TxEvent response_received(int code) { return {TxEventKind::ResponseReceived, code}; }
    static TxEvent request_retransmission() { return {TxEventKind::RequestRetransmission, 0}; }
    static TxEvent ack_received() { return {TxEventKind::AckReceived, 0}; }
};

enum class TxAction { Transmit, Retransmit, DeliverToApplication, EmitTimeout, CountUnexpected };

struct TxOutcome {
    TransactionState state;
    std::vector<TxAction> actions;
};

class EventAfterTermination : public std::logic_error {
  public:
    EventAfterTermination() : std::logic_error("event delivered to a terminated transaction") {}
};

// Pure transition function for client and server transactions.
//
// Client: Calling --1xx--> Proceeding --final--> Completed --timer--> Terminated.
//   Calling retransmits on each timer until max_attempts, then times out.
//   Proceeding keeps a watchdog on the same schedule but does not resend.
// Server: Calling --send 1xx--> Proceeding --send final--> Completed.
//   Completed retransmits the final on request retransmission, and on timer
//   when awaits_ack; ACK or linger expiry terminates it.
TxOutcome transaction_event(const TransactionState& state, TxEvent event, const TxTimers& timers = {});

}  // namespace voipbed::sip

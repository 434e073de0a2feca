#pragma once

#include <atomic>
#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "voipbed/net/endpoint.h"
#include "voipbed/net/event_loop.h"
#include "voipbed/sip/message.h"
#include "voipbed/sip/transaction.h"

namespace voipbed::sip {

struct TransactionCounters {
    std::uint64_t retransmissions = 0;
    std::uint64_t timeouts = 0;
    std::uint64_t unexpected = 0;
};

// Drives transaction_event() over a real transport: owns the retransmission
// timers, matches responses to client transactions and retransmitted requests
// to server transactions. Loop-thread only, except counters().
class TransactionLayer {
  public:
    using SendFn = std::function<void(const net::Endpoint&, std::string_view)>;

    struct ClientHandlers {
        std::function<void(const SipMessage&)> on_response;
        std::function<void()> on_timeout;
        std::function<void()> on_retransmit;
    };

    enum class Inbound { NewRequest, Absorbed };

    TransactionLayer(net::EventLoop& loop, SendFn send, TxTimers timers = {});
    ~TransactionLayer();
    TransactionLayer(const TransactionLayer&) = delete;
    TransactionLayer& operator=(const TransactionLayer&) = delete;

    // `request` must carry a top Via with a unique branch.
    void send_request(const SipMessage& request, const net::Endpoint& dest, ClientHandlers handlers);
    // False when no client transaction matches; the unexpected counter is bumped.
    bool receive_response(const SipMessage& response);

    // ACKs for 2xx always come back as NewRequest so the TU can relay or
    // record them; a matching INVITE server transaction is terminated first.
    Inbound receive_request(const SipMessage& request, const net::Endpoint& from);
    // True when the response went on the wire; false when no server
    // transaction matches or it already sent a final. For INVITE finals,
    // `retransmit_final` keeps resending until ACK.
    bool send_response(const SipMessage& response, bool retransmit_final = true);

    std::string new_branch();
    const TxTimers& timers() const { return timers_; }
    TransactionCounters counters() const;
    void count_unexpected() { unexpected_.fetch_add(1, std::memory_order_relaxed); }
    std::size_t client_count() const { return clients_.size(); }
    std::size_t server_count() const { return servers_.size(); }

  private:
    struct ClientTx {
        TransactionState state;
        SipMessage request;
        std::string wire;
        std::string ack_wire;
        net::Endpoint dest;
        ClientHandlers handlers;
        bool invite = false;
        net::EventLoop::TimerId timer = 0;
    };
    struct ServerTx {
        TransactionState state;
        net::Endpoint source;
        std::string last_response;
        std::string dialog_key;
        bool invite = false;
        net::EventLoop::TimerId timer = 0;
    };

    void arm_client(const std::string& key, Duration after);
    void arm_server(const std::string& key, Duration after);
    void on_client_timer(const std::string& key);
    void on_server_timer(const std::string& key);
    void erase_server(const std::string& key);
    static std::string build_ack(const SipMessage& request, const SipMessage& response);

    net::EventLoop& loop_;
    SendFn send_;
    TxTimers timers_;
    std::string branch_prefix_;
    std::uint64_t branch_seq_ = 0;

    std::unordered_map<std::string, ClientTx> clients_;
    std::unordered_map<std::string, ServerTx> servers_;
    std::unordered_map<std::string, std::string> invite_by_dialog_;

    std::atomic<std::uint64_t> retransmissions_{0};
    std::atomic<std::uint64_t> timeouts_{0};
    std::atomic<std::uint64_t> unexpected_{0};
};

}  // namespace voipbed::sip

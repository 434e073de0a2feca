#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "voipbed/gateway/dialplan.h"
#include "voipbed/net/event_loop.h"
#include "voipbed/net/udp_socket.h"
#include "voipbed/server/profile.h"
#include "voipbed/server/work_queue.h"
#include "voipbed/sip/transaction_layer.h"

namespace voipbed::gateway {

struct FxsEndpoint {
    std::string id;
    std::string number;
    net::Duration ring_delay{0};
    net::Duration answer_delay = std::chrono::seconds(2);
    int lines = 1;  // concurrent calls before 486

    // Throws std::invalid_argument on negative delays or lines < 1.
    void validate() const;
};

enum class CallState { Setup, Ringing, Answered, TornDown };
std::string_view to_string(CallState s);
// Forward-only: Setup < Ringing < Answered < TornDown, and TornDown from anywhere.
bool can_advance(CallState from, CallState to);

// leg A is the upstream SIP dialog, leg B the virtual FXS line.
struct BridgedCall {
    std::string call_id;
    sip::SipMessage invite;      // leg A's INVITE as received
    net::Endpoint source;        // where it came from
    std::string local_tag;
    std::string fxs_id;
    CallState state = CallState::Setup;
    bool leg_a_up = true;
    bool leg_b_up = true;
    net::EventLoop::TimerId timer = 0;  // pending ring/answer
};

struct CallSnapshot {
    std::string call_id;
    std::string fxs_id;
    CallState state;
    bool leg_a_up;
    bool leg_b_up;
};

struct GatewayOptions {
    net::Endpoint bind = net::Endpoint::loopback(5070);
    std::string domain = "gw.test";
    server::ServerProfile profile = server::ServerProfile::gateway_default();
    std::vector<FxsEndpoint> endpoints;
    std::vector<DialplanEntry> dialplan;
    sip::TxTimers timers{};
    // How long torn-down calls stay visible to snapshot().
    net::Duration keep_finished = std::chrono::seconds(5);
};

struct GatewayStats {
    std::uint64_t received = 0;
    std::uint64_t malformed = 0;
    std::uint64_t shed = 0;
    std::uint64_t invites = 0;
    std::uint64_t ringing = 0;
    std::uint64_t answered = 0;
    std::uint64_t busy = 0;
    std::uint64_t not_found = 0;
    std::uint64_t torn_down = 0;
    bool hard_failed = false;
};

// INVITE -> (profile INVITE delay) -> dialplan -> FXS ring_delay -> 180 ->
// answer_delay -> 200 until ACK. BYE from either side ends both legs.
class GatewayB2bua {
  public:
    // Throws net::BindError, or std::invalid_argument for a bad endpoint or
    // a dialplan naming an unknown endpoint.
    explicit GatewayB2bua(GatewayOptions options);
    ~GatewayB2bua();
    GatewayB2bua(const GatewayB2bua&) = delete;
    GatewayB2bua& operator=(const GatewayB2bua&) = delete;

    net::Endpoint endpoint() const { return endpoint_; }
    const GatewayOptions& options() const { return options_; }

    // FXS side hangs up: BYE upstream to the caller's Contact, both legs end.
    // False when the call is unknown or already torn down.
    bool hangup_from_fxs(const std::string& call_id);

    GatewayStats stats() const;
    server::QueueStats queue_stats() const { return queue_.stats(); }
    sip::TransactionCounters transaction_counters() const { return tx_->counters(); }
    std::vector<CallSnapshot> snapshot();
    int lines_in_use(const std::string& fxs_id);

  private:
    void on_readable();
    void admit(net::Datagram d, net::TimePoint now);
    void process(const sip::SipMessage& msg, const net::Endpoint& from);
    void on_invite(const sip::SipMessage& msg, const net::Endpoint& from);
    void on_bye(const sip::SipMessage& msg, const net::Endpoint& from);
    void on_cancel(const sip::SipMessage& msg, const net::Endpoint& from);
    void ring(const std::string& call_id);
    void answer(const std::string& call_id);
    void tear_down(BridgedCall& call);
    sip::SipMessage response_for(const BridgedCall& call, int code) const;
    void send(const net::Endpoint& to, std::string_view wire);

    GatewayOptions options_;
    std::map<std::string, FxsEndpoint> endpoints_;
    net::EventLoop loop_;
    net::UdpSocket sock_;
    net::Endpoint endpoint_;
    server::WorkQueue queue_;
    server::RateMeter meter_;
    std::unique_ptr<sip::TransactionLayer> tx_;
    std::unordered_map<std::string, BridgedCall> calls_;
    std::map<std::string, int> busy_lines_;
    std::uint64_t tag_seq_ = 0;
    std::uint32_t bye_cseq_ = 1;

    std::atomic<std::uint64_t> received_{0}, malformed_{0}, shed_{0}, invites_{0}, ringing_{0}, answered_{0}, busy_{0},
        not_found_{0}, torn_down_{0};
    std::atomic<bool> hard_failed_{false};
    std::unique_ptr<net::LoopThread> thread_;
};

}  // namespace voipbed::gateway

#pragma once

#include <atomic>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "voipbed/harness/scenario.h"
#include "voipbed/net/udp_socket.h"
#include "voipbed/sip/transaction_layer.h"

namespace voipbed::harness {

class RegistrationFailed : public std::runtime_error {
  public:
    explicit RegistrationFailed(std::string aor);
    const std::string& aor() const { return aor_; }

  private:
    std::string aor_;
};

// Answering side: every INVITE to any registered user gets 180 then 200 at
// once; BYE gets 200. One socket serves all users.
class UasPool {
  public:
    explicit UasPool(sip::TxTimers timers = {});
    ~UasPool();
    UasPool(const UasPool&) = delete;
    UasPool& operator=(const UasPool&) = delete;

    net::Endpoint endpoint() const { return endpoint_; }
    // REGISTERs user@domain with our socket as Contact; retried on silence.
    // Throws RegistrationFailed.
    void register_user(const std::string& user, const std::string& domain, const net::Endpoint& registrar,
                       net::Duration timeout = std::chrono::seconds(1), int attempts = 3);
    const std::vector<std::string>& users() const { return users_; }

    std::uint64_t invites() const { return invites_.load(); }
    std::uint64_t byes() const { return byes_.load(); }

  private:
    void on_message(const sip::SipMessage& msg, const net::Endpoint& from);

    net::EventLoop loop_;
    net::UdpSocket sock_;
    net::Endpoint endpoint_;
    std::unique_ptr<sip::TransactionLayer> tx_;
    std::vector<std::string> users_;
    std::uint64_t tag_seq_ = 0;
    std::atomic<std::uint64_t> invites_{0}, byes_{0};
    std::unique_ptr<net::LoopThread> thread_;
};

// `count` users uas1..uasN registered at `registrar`.
std::unique_ptr<UasPool> register_pool(int count, const net::Endpoint& registrar, const std::string& domain = "ims.test",
                                       sip::TxTimers timers = {});

struct UacConfig {
    net::Endpoint first_hop;  // every request goes here (outbound proxy)
    std::string domain = "ims.test";
    net::Duration endpoint_delay{0};
    net::Duration hold = std::chrono::seconds(1);
    int abort_after_timeouts = 50;
    sip::TxTimers timers{};
};

struct UacResults {
    std::vector<CallRecord> records;  // probes, in start order
    Counters counters;
    std::uint64_t background_started = 0;
    std::uint64_t background_completed = 0;
    bool aborted = false;
};

// Calling side. Inbound datagrams are held for endpoint_delay before the
// UAC looks at them, which is where the 180 timestamp is taken.
class UacPool {
  public:
    explicit UacPool(UacConfig config);
    ~UacPool();
    UacPool(const UacPool&) = delete;
    UacPool& operator=(const UacPool&) = delete;

    net::Endpoint endpoint() const { return endpoint_; }
    // Thread-safe. Places a call to `request_uri` at `when`.
    void schedule_call(net::TimePoint when, std::string request_uri, bool probe);
    std::size_t active();
    std::size_t scheduled();
    bool aborted() const { return aborted_.load(); }
    // Calls still open are closed out as timeouts.
    UacResults finish();

  private:
    struct Call {
        CallRecord rec;
        bool probe = false;
        sip::SipMessage invite;
        std::string remote_to;   // To with the remote tag
        std::string remote_uri;  // Contact of the 2xx
        std::string ack_wire;
        bool bye_sent = false;
    };

    void on_readable();
    void dispatch(const sip::SipMessage& msg, const net::Endpoint& from);
    void start_call(const std::string& request_uri, bool probe);
    void on_invite_response(const std::string& call_id, const sip::SipMessage& resp);
    void send_bye(const std::string& call_id);
    void close_call(const std::string& call_id, bool timed_out);

    UacConfig config_;
    net::EventLoop loop_;
    net::UdpSocket sock_;
    net::Endpoint endpoint_;
    std::unique_ptr<sip::TransactionLayer> tx_;
    std::unordered_map<std::string, Call> calls_;
    std::vector<CallRecord> done_probes_;
    std::vector<std::string> probe_order_;
    std::uint64_t call_seq_ = 0;
    std::uint64_t background_started_ = 0, background_completed_ = 0;
    std::uint64_t stray_ = 0, forced_timeouts_ = 0;
    std::size_t scheduled_ = 0;
    int consecutive_timeouts_ = 0;
    std::atomic<bool> aborted_{false};
    std::unique_ptr<net::LoopThread> thread_;
};

}  // namespace voipbed::harness

#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "voipbed/net/event_loop.h"

namespace voipbed::server {

using net::Duration;

enum class ServerRole { Ims, Gateway, Enum };

// Kinds of signal a server processes. Responses are keyed by status class
// that matters for the call flow; anything else falls into Other.
enum class SignalKind { Invite, Trying, Ringing, Ok, Ack, Bye, Cancel, Register, Query, Other };

std::string_view to_string(ServerRole role);
std::optional<ServerRole> parse_server_role(std::string_view text);
std::string_view to_string(SignalKind kind);
std::optional<SignalKind> parse_signal_kind(std::string_view text);

struct CpuPoint {
    double rate = 0;     // call/s or query/s
    double percent = 0;  // 0..100
};

class ProfileError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Processing-delay and capacity calibration for one server role.
//
// per_signal_delay is latency added before a signal is acted on. capacity is
// throughput: the server's work queue drains at capacity * signals_per_call
// signals per second, independent of the latency values.
struct ServerProfile {
    ServerRole role = ServerRole::Ims;
    std::map<SignalKind, Duration> per_signal_delay;
    double capacity = 0;       // max sustainable call/s (query/s for Enum); 0 = unbounded
    int signals_per_call = 1;  // inbound signals the server handles per call
    std::vector<CpuPoint> cpu_curve;
    Duration max_backlog = std::chrono::seconds(1);
    std::optional<double> hard_fail_at;  // call/s at which the server stops answering

    Duration delay_for(SignalKind kind) const;
    Duration total_call_processing() const;
    // Queue occupancy charged per admitted signal; zero when capacity is unbounded.
    Duration service_cost() const;
    // Backlog a burst may build before signals start waiting: one call of work.
    Duration queue_grace() const { return service_cost() * signals_per_call; }

    // Throws ProfileError when an invariant does not hold.
    void validate() const;

    static ServerProfile ims_default();
    static ServerProfile gateway_default();
    static ServerProfile enum_default();
    static ServerProfile zero_delay(ServerRole role);
};

// Largest calibration rate whose utilization stays under 100%, or nullopt when
// the curve never saturates.
std::optional<double> saturation_capacity(const std::vector<CpuPoint>& curve);

inline Duration from_ms(double ms) {
    return std::chrono::round<Duration>(std::chrono::duration<double, std::milli>(ms));
}
inline double to_ms(Duration d) { return std::chrono::duration<double, std::milli>(d).count(); }

}  // namespace voipbed::server

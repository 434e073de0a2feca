#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "voipbed/enumdns/zone.h"
#include "voipbed/gateway/b2bua.h"
#include "voipbed/harness/load.h"
#include "voipbed/net/event_loop.h"
#include "voipbed/server/profile.h"
#include "voipbed/server/work_queue.h"
#include "voipbed/sip/transaction.h"

namespace voipbed::harness {

enum class ScenarioId { S1, S2, S3, GwDirect };

std::string_view to_string(ScenarioId id);
// "s1", "s2", "s3", "gw"
std::optional<ScenarioId> parse_scenario(std::string_view text);

struct Scenario {
    ScenarioId id = ScenarioId::S1;
    bool enum_enabled = false;
    bool via_ims = true;          // false: UAC talks to the gateway directly
    std::string probe_user;       // Request-URI user of timed calls
    std::string background_user;  // Request-URI user of untimed calls
    std::string target_domain;    // Request-URI host

    static Scenario get(ScenarioId id);
};

enum class Outcome { RingingOk, Timeout, Rejected, Unexpected };
std::string_view to_string(Outcome o);

struct CallRecord {
    std::string call_id;
    std::optional<net::TimePoint> t_invite_sent;
    std::optional<net::TimePoint> t_180_received;
    std::optional<net::TimePoint> t_200_received;
    int retransmissions = 0;
    int final_status = 0;
    Outcome outcome = Outcome::Timeout;
};

struct Counters {
    std::uint64_t retrans = 0;
    std::uint64_t timeout = 0;
    std::uint64_t unexpected_msg = 0;
    std::uint64_t shed_observed = 0;

    bool operator==(const Counters&) const = default;
};

struct RunResult {
    ScenarioId scenario = ScenarioId::S1;
    double rate = 0;
    std::vector<CallRecord> records;  // probes only
    Counters counters;                // probes + background
    std::map<std::string, server::QueueStats> queues;  // "ims", "gateway", "enum"
    std::uint64_t background_started = 0;
    std::uint64_t background_completed = 0;
    std::uint64_t signals_offered_ims = 0;  // datagrams the IMS received
    bool aborted = false;

    // IMS shed / IMS received; gateway figures when the IMS is not in the path.
    double shed_rate() const;
};

// What the in-process testbed boots.
struct TopologyConfig {
    server::ServerProfile ims_profile = server::ServerProfile::ims_default();
    server::ServerProfile gateway_profile = server::ServerProfile::gateway_default();
    server::ServerProfile enum_profile = server::ServerProfile::enum_default();
    std::string ims_domain = "ims.test";
    std::string gateway_domain = "gw.test";
    std::shared_ptr<const enumdns::EnumZone> zone;  // default_zone() when null
    std::vector<gateway::FxsEndpoint> endpoints;
    std::vector<gateway::DialplanEntry> dialplan;
    net::Endpoint ims_bind = net::Endpoint::loopback(0);
    net::Endpoint gateway_bind = net::Endpoint::loopback(0);
    net::Endpoint enum_bind = net::Endpoint::loopback(0);
    int uas_count = 2;  // uas1..uasN registered
    sip::TxTimers timers{};
};

// Zone under e164.test: 1001 -> uas1@ims, 1002 -> uas2@ims, 2003 and 3000
// -> the gateway.
std::shared_ptr<const enumdns::EnumZone> default_zone();
// fxs1 (2003, one line) and bank (3000, 256 lines), with a matching dialplan.
TopologyConfig default_topology();

struct HarnessOptions {
    net::Duration endpoint_delay = std::chrono::microseconds(103950);
    net::Duration warmup = std::chrono::seconds(2);
    net::Duration hold = std::chrono::seconds(1);  // background calls; probes hang up at once
    net::Duration drain = std::chrono::seconds(30);
    // Stop offering calls once this many finish in a row with a timeout.
    int abort_after_timeouts = 50;
    std::uint64_t seed = 1;
    sip::TxTimers timers{};
};

}  // namespace voipbed::harness

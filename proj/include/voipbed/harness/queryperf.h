#pragma once

#include <vector>

#include "voipbed/enumdns/zone.h"
#include "voipbed/net/endpoint.h"
#include "voipbed/net/event_loop.h"

namespace voipbed::harness {

// Reported next to the measured ceiling; hardware-specific, never asserted.
inline constexpr double kReferenceQueryperfCeiling = 8156.87;

struct QueryperfOptions {
    net::Endpoint server;
    double start_rate = 1000;
    double step = 1000;
    double max_rate = 20000;  // also caps the reported ceiling
    net::Duration window = std::chrono::seconds(1);
    net::Duration grace = std::chrono::milliseconds(20);
    double max_error_fraction = 0.01;
    int refine_steps = 4;  // bisections between last pass and first fail
};

struct QueryperfStep {
    double rate = 0;
    std::uint64_t sent = 0;
    std::uint64_t correct = 0;
    std::uint64_t wrong = 0;   // answered, but not what the zone holds
    std::uint64_t errors = 0;  // error rcode or undecodable
    std::uint64_t lost = 0;    // no answer within window + grace
    double p50_ms = 0, p95_ms = 0, p99_ms = 0;
    bool passed = false;
};

struct QueryperfResult {
    double ceiling = 0;  // highest passing rate, 0 when none passed
    std::vector<QueryperfStep> steps;
    std::uint64_t wrong_answers = 0;
    bool server_answered = false;
    const QueryperfStep* at_ceiling() const;
};

// One fixed-rate window. Queries cycle through every number in `zone`;
// answers are checked record-for-record against it.
QueryperfStep run_query_step(const QueryperfOptions& options, const enumdns::EnumZone& zone, double rate);

// Ramps from start_rate by step until a window fails (error/loss > 1%),
// halving instead when the first window already fails, then bisects.
QueryperfResult queryperf(const QueryperfOptions& options, const enumdns::EnumZone& zone);

}  // namespace voipbed::harness

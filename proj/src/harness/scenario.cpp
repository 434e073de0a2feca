#include "voipbed/harness/scenario.h"

namespace voipbed::harness {

std::string_view to_string(ScenarioId id) {
    switch (id) {
        case ScenarioId::S1: return "s1";
        case ScenarioId::S2: return "s2";
        case ScenarioId::S3: return "s3";
        case ScenarioId::GwDirect: return "gw";
    }
    return "?";
}

std::optional<ScenarioId> parse_scenario(std::string_view text) {
    for (auto id : {ScenarioId::S1, ScenarioId::S2, ScenarioId::S3, ScenarioId::GwDirect}) {
        if (text == to_string(id)) return id;
    }
    return std::nullopt;
}

Scenario Scenario::get(ScenarioId id) {
    switch (id) {
        case ScenarioId::S1: return {id, false, true, "uas1", "uas2", "ims.test"};
        case ScenarioId::S2: return {id, true, true, "1001", "1002", "ims.test"};
        case ScenarioId::S3: return {id, true, true, "2003", "3000", "ims.test"};
        // Probes use the line bank: the single-line FXS would answer busy at load.
        case ScenarioId::GwDirect: return {id, false, false, "3001", "3000", "gw.test"};
    }
    return {};
}

std::string_view to_string(Outcome o) {
    switch (o) {
        case Outcome::RingingOk: return "ringing_ok";
        case Outcome::Timeout: return "timeout";
        case Outcome::Rejected: return "rejected";
        case Outcome::Unexpected: return "unexpected";
    }
    return "?";
}

double RunResult::shed_rate() const {
    const char* name = scenario == ScenarioId::GwDirect ? "gateway" : "ims";
    auto it = queues.find(name);
    if (it == queues.end()) return 0;
    const auto total = it->second.admitted + it->second.shed;
    return total == 0 ? 0.0 : static_cast<double>(it->second.shed) / static_cast<double>(total);
}

std::shared_ptr<const enumdns::EnumZone> default_zone() {
    auto zone = std::make_shared<enumdns::EnumZone>("e164.test");
    auto add = [&](const char* number, const char* uri) {
        zone->add(enumdns::E164Number::parse(number),
                  {100, 10, "u", "E2U+sip", std::string("!^.*$!") + uri + "!", ".", 300});
    };
    add("1001", "sip:uas1@ims.test");
    add("1002", "sip:uas2@ims.test");
    add("2003", "sip:2003@gw.test");
    add("3000", "sip:3000@gw.test");
    return zone;
}

TopologyConfig default_topology() {
    TopologyConfig t;
    t.zone = default_zone();
    t.endpoints = {{"fxs1", "2003", net::Duration::zero(), std::chrono::seconds(2), 1},
                   {"bank", "3000", net::Duration::zero(), std::chrono::seconds(2), 256}};
    t.dialplan = {{"2003", gateway::DialplanEntry::Action::ToFxs, "fxs1", 0},
                  {"_3XXX", gateway::DialplanEntry::Action::ToFxs, "bank", 0}};
    return t;
}

}  // namespace voipbed::harness

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>

#include "voipbed/enumdns/e164.h"
#include "voipbed/enumdns/resolver.h"
#include "voipbed/ims/location.h"
#include "voipbed/sip/message.h"

namespace voipbed::ims {

struct RoutingContext {
    std::string domain = "ims.test";              // served by the location store
    std::optional<net::Endpoint> self;            // our own address, also "ours"
    bool enum_enabled = false;
    std::map<std::string, net::Endpoint> hosts;   // static name -> address table
};

struct RouteDecision {
    enum class Kind { Forward, Respond };
    Kind kind = Kind::Respond;
    net::Endpoint target{};
    std::string request_uri;  // retargeted Request-URI when forwarding
    int status = 404;         // when responding
    bool enum_consulted = false;

    static RouteDecision forward(net::Endpoint to, std::string uri, bool via_enum) {
        return {Kind::Forward, to, std::move(uri), 0, via_enum};
    }
    static RouteDecision respond(int status, bool via_enum) { return {Kind::Respond, {}, {}, status, via_enum}; }
    bool operator==(const RouteDecision&) const = default;
};

// First half of route_invite: everything that needs no ENUM answer.
struct RouteStep {
    std::optional<RouteDecision> decision;    // set when done
    std::optional<enumdns::E164Number> enum_number;  // set when an ENUM lookup is needed
};

RouteStep classify_invite(const sip::SipMessage& invite, const LocationStore& db, const RoutingContext& ctx);
// Second half: maps an ENUM answer to a decision. Nxdomain and
// NoViableRecord give 404, Timeout and other failures 500.
RouteDecision finish_with_enum(const enumdns::ResolveResult& answer, const LocationStore& db, const RoutingContext& ctx);

// Both halves with a synchronous resolver.
RouteDecision route_invite(const sip::SipMessage& invite, const LocationStore& db, const RoutingContext& ctx,
                           const std::function<enumdns::ResolveResult(const enumdns::E164Number&)>& resolve);

}  // namespace voipbed::ims

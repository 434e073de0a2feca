#include "voipbed/ims/routing.h"

#include <algorithm>
#include <cctype>

#include "voipbed/sip/uri.h"

namespace voipbed::ims {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

bool is_ours(const sip::SipUri& uri, const RoutingContext& ctx) {
    if (lower(uri.host) == lower(ctx.domain)) return true;
    auto lit = uri.literal_endpoint();
    return lit && ctx.self && *lit == *ctx.self;
}

std::optional<net::Endpoint> resolve_host(const sip::SipUri& uri, const RoutingContext& ctx) {
    if (auto it = ctx.hosts.find(lower(uri.host)); it != ctx.hosts.end()) {
        auto ep = it->second;
        if (uri.port) ep.port = *uri.port;
        return ep;
    }
    return uri.literal_endpoint();
}

// Location lookup for an AOR in our domain. The Request-URI becomes the
// registered contact.
std::optional<RouteDecision> from_location(const sip::SipUri& uri, const LocationStore& db, bool via_enum) {
    sip::SipUri key = uri;
    auto binding = db.lookup(key.aor_key());
    if (!binding) return std::nullopt;
    sip::SipUri target;
    target.user = uri.user;
    target.host = binding->contact.host();
    target.port = binding->contact.port;
    return RouteDecision::forward(binding->contact, target.to_string(), via_enum);
}

RouteDecision route_uri(const sip::SipUri& uri, const LocationStore& db, const RoutingContext& ctx, bool via_enum) {
    if (is_ours(uri, ctx)) {
        sip::SipUri in_domain = uri;
        in_domain.host = ctx.domain;
        in_domain.port.reset();
        if (auto d = from_location(in_domain, db, via_enum)) return *d;
        return RouteDecision::respond(404, via_enum);
    }
    if (auto ep = resolve_host(uri, ctx)) return RouteDecision::forward(*ep, uri.to_string(), via_enum);
    return RouteDecision::respond(404, via_enum);
}

}  // namespace

RouteStep classify_invite(const sip::SipMessage& invite, const LocationStore& db, const RoutingContext& ctx) {
    auto uri = sip::SipUri::parse(invite.request_uri());
    if (!uri) return {RouteDecision::respond(404, false), std::nullopt};
    if (!is_ours(*uri, ctx)) return {route_uri(*uri, db, ctx, false), std::nullopt};

    sip::SipUri in_domain = *uri;
    in_domain.host = ctx.domain;
    in_domain.port.reset();
    if (auto d = from_location(in_domain, db, false)) return {*d, std::nullopt};
    if (ctx.enum_enabled) {
        if (auto n = enumdns::E164Number::try_parse(uri->user); n && !uri->user.starts_with('+')) {
            return {std::nullopt, *n};
        }
    }
    return {RouteDecision::respond(404, false), std::nullopt};
}

RouteDecision finish_with_enum(const enumdns::ResolveResult& answer, const LocationStore& db, const RoutingContext& ctx) {
    if (const auto* err = std::get_if<enumdns::EnumError>(&answer)) {
        switch (err->code()) {
            case enumdns::EnumErrc::Nxdomain:
            case enumdns::EnumErrc::NoViableRecord:
            case enumdns::EnumErrc::PatternMismatch: return RouteDecision::respond(404, true);
            default: return RouteDecision::respond(500, true);
        }
    }
    auto uri = sip::SipUri::parse(std::get<std::string>(answer));
    if (!uri) return RouteDecision::respond(404, true);
    return route_uri(*uri, db, ctx, true);
}

RouteDecision route_invite(const sip::SipMessage& invite, const LocationStore& db, const RoutingContext& ctx,
                           const std::function<enumdns::ResolveResult(const enumdns::E164Number&)>& resolve) {
    auto step = classify_invite(invite, db, ctx);
    if (step.decision) return *step.decision;
    return finish_with_enum(resolve(*step.enum_number), db, ctx);
}

}  // namespace voipbed::ims

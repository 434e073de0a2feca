#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "voipbed/net/endpoint.h"

namespace voipbed::sip {

// sip:user@host[:port][;params]
struct SipUri {
    std::string user;
    std::string host;
    std::optional<std::uint16_t> port;
    std::string params;  // raw, without the leading ';'

    static std::optional<SipUri> parse(std::string_view text);
    std::string to_string() const;

    // Set only when host is a dotted-quad literal; port defaults to 5060.
    std::optional<net::Endpoint> literal_endpoint() const;
    // user@host with the host lowercased.
    std::string aor_key() const;
};

// Extracts the addr-spec from a name-addr ("Bob" <sip:b@h>;tag=x) or a bare
// addr-spec header value.
std::string_view addr_spec(std::string_view header_value);

// Value of ";name=value" in the header parameters (those after the addr-spec
// for name-addr, or anywhere for Via).
std::optional<std::string> header_param(std::string_view header_value, std::string_view name);

struct Via {
    std::string transport;  // "UDP"
    std::string host;
    std::uint16_t port = 5060;
    std::string branch;

    std::optional<net::Endpoint> endpoint() const;
};

std::optional<Via> parse_via(std::string_view value);
std::string format_via(const net::Endpoint& sent_by, std::string_view branch);

inline constexpr std::string_view kBranchCookie = "z9hG4bK";

}  // namespace voipbed::sip

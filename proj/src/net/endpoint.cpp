#include "voipbed/net/endpoint.h"

#include <arpa/inet.h>

#include <charconv>

namespace voipbed::net {

std::optional<Endpoint> Endpoint::parse(std::string_view text, std::uint16_t default_port) {
    std::string_view host = text;
    std::uint16_t port = default_port;
    if (auto colon = text.rfind(':'); colon != std::string_view::npos) {
        host = text.substr(0, colon);
        auto digits = text.substr(colon + 1);
        unsigned value = 0;
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
        if (digits.empty() || ec != std::errc{} || ptr != digits.data() + digits.size() || value > 65535) {
            return std::nullopt;
        }
        port = static_cast<std::uint16_t>(value);
    }
    if (host == "localhost") host = "127.0.0.1";
    std::string host_str(host);
    in_addr addr{};
    if (inet_pton(AF_INET, host_str.c_str(), &addr) != 1) return std::nullopt;
    return Endpoint{ntohl(addr.s_addr), port};
}

std::string Endpoint::host() const {
    in_addr addr{};
    addr.s_addr = htonl(address);
    char buf[INET_ADDRSTRLEN] = {};
    inet_ntop(AF_INET, &addr, buf, sizeof buf);
    return buf;
}

std::string Endpoint::to_string() const { return host() + ":" + std::to_string(port); }

}  // namespace voipbed::net

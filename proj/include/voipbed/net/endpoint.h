#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace voipbed::net {

inline constexpr std::uint32_t kLoopbackAddress = 0x7f000001;

// IPv4 address + UDP port, host byte order.
struct Endpoint {
    std::uint32_t address = 0;
    std::uint16_t port = 0;

    // Accepts "a.b.c.d" or "a.b.c.d:port". Returns nullopt on anything else.
    static std::optional<Endpoint> parse(std::string_view text, std::uint16_t default_port = 0);
    static Endpoint loopback(std::uint16_t port) { return Endpoint{kLoopbackAddress, port}; }

    std::string host() const;
    std::string to_string() const;

    auto operator<=>(const Endpoint&) const = default;
};

}  // namespace voipbed::net

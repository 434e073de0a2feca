#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "voipbed/enumdns/naptr.h"

namespace voipbed::enumdns {

inline constexpr std::uint16_t kTypeNaptr = 35;
inline constexpr std::uint16_t kClassIn = 1;
inline constexpr std::size_t kMaxUdpPayload = 512;

enum class Rcode : std::uint8_t { NoError = 0, FormErr = 1, ServFail = 2, NxDomain = 3, NotImp = 4, Refused = 5 };

struct DnsHeader {
    std::uint16_t id = 0;
    bool qr = false;
    std::uint8_t opcode = 0;
    bool aa = false;
    bool tc = false;
    bool rd = false;
    bool ra = false;
    std::uint8_t rcode = 0;
    std::uint16_t qdcount = 0;
    std::uint16_t ancount = 0;
    std::uint16_t nscount = 0;
    std::uint16_t arcount = 0;
};

struct DnsQuestion {
    std::string name;  // no trailing dot
    std::uint16_t qtype = kTypeNaptr;
    std::uint16_t qclass = kClassIn;
    bool operator==(const DnsQuestion&) const = default;
};

struct DnsQuery {
    DnsHeader header;
    DnsQuestion question;
};

struct DnsResponse {
    DnsHeader header;
    DnsQuestion question;
    std::vector<NaptrRecord> answers;  // NAPTR answers only; other types skipped
};

// Standard query, RD set, one question. Names are not compressed.
std::vector<std::uint8_t> encode_query(std::string_view domain, std::uint16_t id = 0, std::uint16_t qtype = kTypeNaptr);

// Throws EnumError(TruncatedPacket | FormatError). Additional records
// (e.g. an EDNS OPT) are ignored.
DnsQuery decode_query(std::span<const std::uint8_t> raw);

// Answers `query`. Records that do not fit in `max_size` are dropped and TC is
// set.
std::vector<std::uint8_t> encode_response(const DnsQuery& query, Rcode rcode, const std::vector<NaptrRecord>& answers,
                                          std::size_t max_size = kMaxUdpPayload);

// Accepts compressed names. Throws EnumError(TruncatedPacket | IdMismatch |
// FormatError | Nxdomain | ServFail).
DnsResponse decode_response(std::span<const std::uint8_t> raw, std::optional<std::uint16_t> expected_id = std::nullopt);

// Peek at the ID of a datagram without decoding it.
std::optional<std::uint16_t> message_id(std::span<const std::uint8_t> raw);

}  // namespace voipbed::enumdns

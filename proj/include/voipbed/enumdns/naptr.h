#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "voipbed/enumdns/e164.h"

namespace voipbed::enumdns {

inline constexpr std::string_view kSipService = "E2U+sip";

struct NaptrRecord {
    std::uint16_t order = 0;
    std::uint16_t preference = 0;
    std::string flags = "u";
    std::string service = std::string(kSipService);
    std::string regexp;
    std::string replacement = ".";
    std::uint32_t ttl = 300;

    bool operator==(const NaptrRecord&) const = default;
};

// Applies "<d>pattern<d>replacement<d>" to number.full(). POSIX extended
// patterns; \1..\9 in the replacement. Throws EnumError(BadRegexpSyntax |
// PatternMismatch).
std::string apply_naptr_regexp(const NaptrRecord& record, const E164Number& number);

// Keeps E2U+sip records, stable-sorted by (order, preference).
std::vector<NaptrRecord> select_naptr(std::vector<NaptrRecord> records);

// select_naptr, then the first terminal "u" record whose regexp applies.
// Throws EnumError(NoViableRecord).
std::string uri_from_records(const std::vector<NaptrRecord>& records, const E164Number& number);

}  // namespace voipbed::enumdns

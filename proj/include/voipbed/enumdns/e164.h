#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace voipbed::enumdns {

inline constexpr std::string_view kDefaultApex = "e164.arpa";

// 1..15 decimal digits; a leading '+' is stripped on ingest.
class E164Number {
  public:
    // Throws EnumError(InvalidNumber).
    static E164Number parse(std::string_view text);
    static std::optional<E164Number> try_parse(std::string_view text);

    const std::string& digits() const { return digits_; }
    // "+<digits>", the string NAPTR regexps are applied to.
    std::string full() const { return "+" + digits_; }

    bool operator==(const E164Number&) const = default;
    auto operator<=>(const E164Number&) const = default;

  private:
    std::string digits_;
};

// "+4689761234" -> "4.3.2.1.6.7.9.8.6.4.e164.arpa"
std::string e164_to_domain(const E164Number& number, std::string_view apex = kDefaultApex);

// Inverse of e164_to_domain. Case-insensitive on the apex, tolerates a
// trailing root dot. Throws EnumError(NotUnderApex | NonDigitLabel |
// MultiCharLabel | InvalidNumber).
E164Number domain_to_e164(std::string_view domain, std::string_view apex = kDefaultApex);

// Lowercased, without trailing dot.
std::string normalize_domain(std::string_view domain);

}  // namespace voipbed::enumdns

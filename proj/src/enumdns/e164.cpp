#include "voipbed/enumdns/e164.h"

#include <algorithm>
#include <cctype>

#include "voipbed/enumdns/error.h"

namespace voipbed::enumdns {

std::optional<E164Number> E164Number::try_parse(std::string_view text) {
    if (text.starts_with('+')) text.remove_prefix(1);
    if (text.empty() || text.size() > 15) return std::nullopt;
    if (!std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isdigit(c); })) return std::nullopt;
    E164Number n;
    n.digits_ = std::string(text);
    return n;
}

E164Number E164Number::parse(std::string_view text) {
    auto n = try_parse(text);
    if (!n) throw EnumError(EnumErrc::InvalidNumber, "'" + std::string(text) + "' is not an E.164 number");
    return *n;
}

std::string normalize_domain(std::string_view domain) {
    if (domain.ends_with('.')) domain.remove_suffix(1);
    std::string out(domain);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string e164_to_domain(const E164Number& number, std::string_view apex) {
    const auto& d = number.digits();
    std::string out;
    out.reserve(d.size() * 2 + apex.size());
    for (auto it = d.rbegin(); it != d.rend(); ++it) {
        out.push_back(*it);
        out.push_back('.');
    }
    out += normalize_domain(apex);
    return out;
}

E164Number domain_to_e164(std::string_view domain, std::string_view apex) {
    auto d = normalize_domain(domain);
    auto a = normalize_domain(apex);
    if (d.size() <= a.size() + 1 || !d.ends_with(a) || d[d.size() - a.size() - 1] != '.') {
        throw EnumError(EnumErrc::NotUnderApex, d + " is not under " + a);
    }
    std::string_view labels(d.data(), d.size() - a.size() - 1);
    std::string digits;
    while (!labels.empty()) {
        auto dot = labels.find('.');
        auto label = labels.substr(0, dot);
        labels = dot == std::string_view::npos ? std::string_view{} : labels.substr(dot + 1);
        if (label.size() != 1) {
            if (!label.empty() && std::all_of(label.begin(), label.end(), [](unsigned char c) { return std::isdigit(c); })) {
                throw EnumError(EnumErrc::MultiCharLabel, "label '" + std::string(label) + "'");
            }
            throw EnumError(label.empty() ? EnumErrc::MultiCharLabel : EnumErrc::NonDigitLabel,
                            "label '" + std::string(label) + "'");
        }
        if (!std::isdigit(static_cast<unsigned char>(label[0]))) {
            throw EnumError(EnumErrc::NonDigitLabel, "label '" + std::string(label) + "'");
        }
        digits.push_back(label[0]);
    }
    std::reverse(digits.begin(), digits.end());
    return E164Number::parse(digits);
}

}  // namespace voipbed::enumdns

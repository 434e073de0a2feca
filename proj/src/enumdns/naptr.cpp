#include "voipbed/enumdns/naptr.h"

#include <algorithm>
#include <cctype>
#include <regex>

#include "voipbed/enumdns/error.h"

namespace voipbed::enumdns {

namespace {

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

}  // namespace

std::string apply_naptr_regexp(const NaptrRecord& record, const E164Number& number) {
    const auto& re = record.regexp;
    if (re.size() < 3) throw EnumError(EnumErrc::BadRegexpSyntax, "regexp too short");
    const char delim = re.front();
    if (std::isalnum(static_cast<unsigned char>(delim)) || delim == '\\') {
        throw EnumError(EnumErrc::BadRegexpSyntax, "bad delimiter");
    }
    if (std::count(re.begin(), re.end(), delim) != 3) {
        throw EnumError(EnumErrc::BadRegexpSyntax, "delimiter must appear exactly three times");
    }
    auto second = re.find(delim, 1);
    auto third = re.find(delim, second + 1);
    std::string pattern = re.substr(1, second - 1);
    std::string replacement = re.substr(second + 1, third - second - 1);
    if (third + 1 != re.size()) throw EnumError(EnumErrc::BadRegexpSyntax, "regexp flags are not supported");
    if (pattern.empty()) throw EnumError(EnumErrc::BadRegexpSyntax, "empty pattern");

    std::regex compiled;
    try {
        compiled = std::regex(pattern, std::regex::extended);
    } catch (const std::regex_error& e) {
        throw EnumError(EnumErrc::BadRegexpSyntax, e.what());
    }
    const std::string subject = number.full();
    std::smatch m;
    if (!std::regex_search(subject, m, compiled)) {
        throw EnumError(EnumErrc::PatternMismatch, subject + " does not match " + pattern);
    }

    std::string out;
    for (std::size_t i = 0; i < replacement.size(); ++i) {
        char c = replacement[i];
        if (c != '\\') {
            out.push_back(c);
            continue;
        }
        if (i + 1 == replacement.size()) throw EnumError(EnumErrc::BadRegexpSyntax, "dangling backslash");
        char n = replacement[++i];
        if (n >= '1' && n <= '9') {
            auto group = static_cast<std::size_t>(n - '0');
            if (group >= m.size()) throw EnumError(EnumErrc::BadRegexpSyntax, "back-reference to missing group");
            out += m[group].str();
        } else {
            out.push_back(n);
        }
    }
    return out;
}

std::vector<NaptrRecord> select_naptr(std::vector<NaptrRecord> records) {
    std::erase_if(records, [](const NaptrRecord& r) { return !iequals(r.service, kSipService); });
    std::stable_sort(records.begin(), records.end(), [](const NaptrRecord& a, const NaptrRecord& b) {
        return a.order != b.order ? a.order < b.order : a.preference < b.preference;
    });
    return records;
}

std::string uri_from_records(const std::vector<NaptrRecord>& records, const E164Number& number) {
    for (const auto& r : select_naptr(records)) {
        if (!iequals(r.flags, "u") || r.regexp.empty()) continue;
        try {
            return apply_naptr_regexp(r, number);
        } catch (const EnumError&) {
            continue;
        }
    }
    throw EnumError(EnumErrc::NoViableRecord, "no usable record for " + number.full());
}

}  // namespace voipbed::enumdns

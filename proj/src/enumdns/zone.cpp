#include "voipbed/enumdns/zone.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include "voipbed/enumdns/error.h"

namespace voipbed::enumdns {

EnumZone::EnumZone(std::string apex) : apex_(normalize_domain(apex)) {}

void EnumZone::add(const E164Number& number, NaptrRecord record) {
    auto& list = entries_[number.digits()];
    for (const auto& r : list) {
        if (r.order == record.order && r.preference == record.preference) {
            throw EnumError(EnumErrc::DuplicateEntry,
                            number.full() + " already has a record with order " + std::to_string(r.order) +
                                " preference " + std::to_string(r.preference));
        }
    }
    list.push_back(std::move(record));
}

const std::vector<NaptrRecord>* EnumZone::find(const E164Number& number) const {
    auto it = entries_.find(number.digits());
    return it == entries_.end() ? nullptr : &it->second;
}

const std::vector<NaptrRecord>* EnumZone::find_domain(std::string_view domain) const {
    try {
        return find(domain_to_e164(domain, apex_));
    } catch (const EnumError&) {
        return nullptr;
    }
}

bool EnumZone::is_apex(std::string_view domain) const { return normalize_domain(domain) == apex_; }

namespace {

// Whitespace-separated tokens; "..." is one token with the quotes removed and
// its contents kept byte for byte.
std::vector<std::string> tokenize(std::string_view line, int lineno) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < line.size()) {
        char c = line[i];
        if (c == ' ' || c == '\t' || c == '\r') {
            ++i;
            continue;
        }
        if (c == '#') break;
        if (c == '"') {
            auto close = line.find('"', i + 1);
            if (close == std::string_view::npos) throw EnumError(EnumErrc::SyntaxError, "unterminated quote", lineno);
            out.emplace_back(line.substr(i + 1, close - i - 1));
            i = close + 1;
            continue;
        }
        auto end = line.find_first_of(" \t\r#\"", i);
        if (end == std::string_view::npos) end = line.size();
        out.emplace_back(line.substr(i, end - i));
        i = end;
    }
    return out;
}

std::uint16_t parse_u16(const std::string& s, const char* what, int lineno) {
    unsigned v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || v > 65535) {
        throw EnumError(EnumErrc::SyntaxError, std::string("bad ") + what + " '" + s + "'", lineno);
    }
    return static_cast<std::uint16_t>(v);
}

}  // namespace

EnumZone parse_zone(std::string_view text, std::string_view apex) {
    EnumZone zone{std::string(apex)};
    int lineno = 0;
    while (!text.empty()) {
        ++lineno;
        auto eol = text.find('\n');
        auto line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);

        auto tok = tokenize(line, lineno);
        if (tok.empty()) continue;
        if (tok.size() != 8 || tok[1] != "NAPTR") {
            throw EnumError(EnumErrc::SyntaxError,
                            "expected '<owner> NAPTR <order> <pref> \"<flags>\" \"<service>\" \"<regexp>\" <replacement>'",
                            lineno);
        }
        E164Number number = E164Number::parse("0");
        if (tok[0].starts_with('+')) {
            auto n = E164Number::try_parse(tok[0]);
            if (!n) throw EnumError(EnumErrc::SyntaxError, "bad number '" + tok[0] + "'", lineno);
            number = *n;
        } else {
            try {
                number = domain_to_e164(tok[0], zone.apex());
            } catch (const EnumError& e) {
                if (e.code() == EnumErrc::NotUnderApex) {
                    throw EnumError(EnumErrc::DomainOutsideApex, tok[0] + " is outside " + zone.apex(), lineno);
                }
                throw EnumError(EnumErrc::SyntaxError, e.what(), lineno);
            }
        }
        NaptrRecord rec;
        rec.order = parse_u16(tok[2], "order", lineno);
        rec.preference = parse_u16(tok[3], "preference", lineno);
        rec.flags = tok[4];
        rec.service = tok[5];
        rec.regexp = tok[6];
        rec.replacement = tok[7];
        if (rec.regexp.empty() == (rec.replacement == ".")) {
            throw EnumError(EnumErrc::SyntaxError, "exactly one of regexp and replacement must be set", lineno);
        }
        try {
            zone.add(number, std::move(rec));
        } catch (const EnumError& e) {
            throw EnumError(e.code(), number.full(), lineno);
        }
    }
    return zone;
}

EnumZone load_zone_file(const std::filesystem::path& path, std::string_view apex) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw EnumError(EnumErrc::IoError, "cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_zone(buf.str(), apex);
}

std::string format_zone(const EnumZone& zone) {
    std::string out;
    for (const auto& [digits, records] : zone.entries()) {
        auto domain = e164_to_domain(E164Number::parse(digits), zone.apex());
        for (const auto& r : records) {
            out += domain + " NAPTR " + std::to_string(r.order) + " " + std::to_string(r.preference) + " \"" + r.flags +
                   "\" \"" + r.service + "\" \"" + r.regexp + "\" " + r.replacement + "\n";
        }
    }
    return out;
}

}  // namespace voipbed::enumdns

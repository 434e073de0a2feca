#include "voipbed/gateway/dialplan.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace voipbed::gateway {

namespace {

std::string compose(DialplanErrc code, const std::string& detail, int line) {
    std::string out = code == DialplanErrc::SyntaxError       ? "SyntaxError"
                      : code == DialplanErrc::UnknownEndpoint ? "UnknownEndpoint"
                                                              : "IoError";
    if (line > 0) out += " at line " + std::to_string(line);
    return out + ": " + detail;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

DialplanError::DialplanError(DialplanErrc code, const std::string& detail, int line)
    : std::runtime_error(compose(code, detail, line)), code_(code), line_(line) {}

bool valid_pattern(std::string_view pattern) {
    if (pattern.empty()) return false;
    if (pattern.starts_with('_')) {
        auto body = pattern.substr(1);
        return !body.empty() && std::all_of(body.begin(), body.end(), [](char c) { return is_digit(c) || c == 'X'; });
    }
    return std::all_of(pattern.begin(), pattern.end(), is_digit);
}

bool pattern_matches(std::string_view pattern, std::string_view number) {
    if (!pattern.starts_with('_')) return pattern == number;
    auto body = pattern.substr(1);
    if (body.size() != number.size()) return false;
    for (std::size_t i = 0; i < body.size(); ++i) {
        if (body[i] == 'X' ? !is_digit(number[i]) : body[i] != number[i]) return false;
    }
    return true;
}

std::optional<DialplanEntry> match_dialplan(std::string_view number, const std::vector<DialplanEntry>& plan) {
    for (const auto& e : plan) {
        if (!e.wildcard() && e.pattern == number) return e;
    }
    for (const auto& e : plan) {
        if (e.wildcard() && pattern_matches(e.pattern, number)) return e;
    }
    return std::nullopt;
}

std::vector<DialplanEntry> parse_dialplan(std::string_view text, const std::set<std::string>& endpoint_ids) {
    std::vector<DialplanEntry> plan;
    int lineno = 0;
    while (!text.empty()) {
        ++lineno;
        auto eol = text.find('\n');
        auto line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        auto arrow = line.find("=>");
        if (arrow == std::string_view::npos) throw DialplanError(DialplanErrc::SyntaxError, "expected '=>'", lineno);
        DialplanEntry e;
        e.line = lineno;
        e.pattern = std::string(trim(line.substr(0, arrow)));
        auto action = trim(line.substr(arrow + 2));
        if (!valid_pattern(e.pattern)) {
            throw DialplanError(DialplanErrc::SyntaxError, "bad pattern '" + e.pattern + "'", lineno);
        }
        if (action == "reject") {
            e.action = DialplanEntry::Action::Reject;
        } else if (action.starts_with("fxs:") && action.size() > 4) {
            e.action = DialplanEntry::Action::ToFxs;
            e.endpoint = std::string(action.substr(4));
            if (!endpoint_ids.contains(e.endpoint)) {
                throw DialplanError(DialplanErrc::UnknownEndpoint, "no FXS endpoint '" + e.endpoint + "'", lineno);
            }
        } else {
            throw DialplanError(DialplanErrc::SyntaxError, "bad action '" + std::string(action) + "'", lineno);
        }
        plan.push_back(std::move(e));
    }
    return plan;
}

std::vector<DialplanEntry> load_dialplan(const std::filesystem::path& path, const std::set<std::string>& endpoint_ids) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DialplanError(DialplanErrc::IoError, "cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_dialplan(buf.str(), endpoint_ids);
}

}  // namespace voipbed::gateway

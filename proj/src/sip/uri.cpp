#include "voipbed/sip/uri.h"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace voipbed::sip {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::optional<std::uint16_t> parse_port(std::string_view s) {
    unsigned value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || value == 0 || value > 65535) {
        return std::nullopt;
    }
    return static_cast<std::uint16_t>(value);
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::optional<std::string> find_param(std::string_view params, std::string_view name) {
    while (!params.empty()) {
        auto semi = params.find(';');
        auto item = trim(params.substr(0, semi));
        params = semi == std::string_view::npos ? std::string_view{} : params.substr(semi + 1);
        auto eq = item.find('=');
        auto key = trim(item.substr(0, eq));
        if (lower(key) == lower(name)) {
            return eq == std::string_view::npos ? std::string() : std::string(trim(item.substr(eq + 1)));
        }
    }
    return std::nullopt;
}

}  // namespace

std::optional<SipUri> SipUri::parse(std::string_view text) {
    text = trim(text);
    std::string_view rest;
    if (text.starts_with("sip:")) {
        rest = text.substr(4);
    } else if (text.starts_with("sips:")) {
        rest = text.substr(5);
    } else {
        return std::nullopt;
    }
    if (auto q = rest.find('?'); q != std::string_view::npos) rest = rest.substr(0, q);

    SipUri uri;
    if (auto semi = rest.find(';'); semi != std::string_view::npos) {
        uri.params = std::string(rest.substr(semi + 1));
        rest = rest.substr(0, semi);
    }
    if (auto at = rest.rfind('@'); at != std::string_view::npos) {
        uri.user = std::string(rest.substr(0, at));
        rest = rest.substr(at + 1);
    }
    if (auto colon = rest.find(':'); colon != std::string_view::npos) {
        auto port = parse_port(rest.substr(colon + 1));
        if (!port) return std::nullopt;
        uri.port = port;
        rest = rest.substr(0, colon);
    }
    if (rest.empty()) return std::nullopt;
    uri.host = std::string(rest);
    return uri;
}

std::string SipUri::to_string() const {
    std::string out = "sip:";
    if (!user.empty()) out += user + "@";
    out += host;
    if (port) out += ":" + std::to_string(*port);
    if (!params.empty()) out += ";" + params;
    return out;
}

std::optional<net::Endpoint> SipUri::literal_endpoint() const {
    return net::Endpoint::parse(host, port.value_or(5060));
}

std::string SipUri::aor_key() const { return user + "@" + lower(host); }

std::string_view addr_spec(std::string_view header_value) {
    auto v = trim(header_value);
    if (auto lt = v.find('<'); lt != std::string_view::npos) {
        auto gt = v.find('>', lt);
        if (gt == std::string_view::npos) return v.substr(lt + 1);
        return v.substr(lt + 1, gt - lt - 1);
    }
    return trim(v.substr(0, v.find(';')));
}

std::optional<std::string> header_param(std::string_view header_value, std::string_view name) {
    auto v = header_value;
    if (auto gt = v.find('>'); v.find('<') != std::string_view::npos && gt != std::string_view::npos) {
        v = v.substr(gt + 1);
    }
    auto semi = v.find(';');
    if (semi == std::string_view::npos) return std::nullopt;
    return find_param(v.substr(semi + 1), name);
}

std::optional<net::Endpoint> Via::endpoint() const { return net::Endpoint::parse(host, port); }

std::optional<Via> parse_via(std::string_view value) {
    auto v = trim(value);
    // Only the first via-parm of a comma-joined header is considered.
    v = v.substr(0, v.find(','));
    auto sp = v.find_first_of(" \t");
    if (sp == std::string_view::npos) return std::nullopt;
    auto protocol = v.substr(0, sp);
    if (!protocol.starts_with("SIP/2.0/")) return std::nullopt;
    Via via;
    via.transport = std::string(protocol.substr(8));
    auto rest = trim(v.substr(sp));
    auto semi = rest.find(';');
    auto sent_by = trim(rest.substr(0, semi));
    if (auto colon = sent_by.find(':'); colon != std::string_view::npos) {
        auto port = parse_port(sent_by.substr(colon + 1));
        if (!port) return std::nullopt;
        via.port = *port;
        sent_by = sent_by.substr(0, colon);
    }
    if (sent_by.empty()) return std::nullopt;
    via.host = std::string(sent_by);
    if (semi != std::string_view::npos) via.branch = find_param(rest.substr(semi + 1), "branch").value_or("");
    return via;
}

std::string format_via(const net::Endpoint& sent_by, std::string_view branch) {
    return "SIP/2.0/UDP " + sent_by.to_string() + ";branch=" + std::string(branch);
}

}  // namespace voipbed::sip

#include "voipbed/sip/message.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>

#include "voipbed/sip/uri.h"

namespace voipbed::sip {

namespace {

constexpr std::string_view kVersion = "SIP/2.0";
constexpr std::string_view kCrlf = "\r\n";

struct CompactForm {
    char letter;
    std::string_view full;
};

constexpr std::array<CompactForm, 10> kCompactForms{{
    {'i', "Call-ID"},
    {'m', "Contact"},
    {'f', "From"},
    {'t', "To"},
    {'v', "Via"},
    {'l', "Content-Length"},
    {'c', "Content-Type"},
    {'e', "Content-Encoding"},
    {'k', "Supported"},
    {'s', "Subject"},
}};

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

std::string_view expand_compact(std::string_view name) {
    if (name.size() == 1) {
        char c = static_cast<char>(std::tolower(static_cast<unsigned char>(name[0])));
        for (const auto& f : kCompactForms) {
            if (f.letter == c) return f.full;
        }
    }
    return name;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

bool is_token(std::string_view s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || std::string_view("-.!%*_+`'~").find(c) != std::string_view::npos;
    });
}

std::optional<unsigned> parse_uint(std::string_view s) {
    unsigned value = 0;
    if (s.empty()) return std::nullopt;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

}  // namespace

std::string_view to_string(Method m) {
    switch (m) {
        case Method::Register: return "REGISTER";
        case Method::Invite: return "INVITE";
        case Method::Ack: return "ACK";
        case Method::Bye: return "BYE";
        case Method::Cancel: return "CANCEL";
        case Method::Unknown: return "UNKNOWN";
    }
    return "UNKNOWN";
}

Method parse_method(std::string_view token) {
    for (auto m : {Method::Register, Method::Invite, Method::Ack, Method::Bye, Method::Cancel}) {
        if (token == to_string(m)) return m;
    }
    return Method::Unknown;
}

bool is_supported_status(int code) {
    switch (code) {
        case 100:
        case 180:
        case 200:
        case 404:
        case 486:
        case 500: return true;
        default: return false;
    }
}

std::string_view default_reason(int code) {
    switch (code) {
        case 100: return "Trying";
        case 180: return "Ringing";
        case 200: return "OK";
        case 400: return "Bad Request";
        case 404: return "Not Found";
        case 481: return "Call/Transaction Does Not Exist";
        case 486: return "Busy Here";
        case 487: return "Request Terminated";
        case 500: return "Server Internal Error";
        case 503: return "Service Unavailable";
        default: return code < 200 ? "Progress" : code < 300 ? "OK" : "Error";
    }
}

std::string_view to_string(ParseErrc code) {
    switch (code) {
        case ParseErrc::MalformedStartLine: return "MalformedStartLine";
        case ParseErrc::MalformedHeader: return "MalformedHeader";
        case ParseErrc::MissingMandatoryHeader: return "MissingMandatoryHeader";
        case ParseErrc::BadContentLength: return "BadContentLength";
    }
    return "?";
}

SipParseError::SipParseError(ParseErrc code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

bool header_name_equals(std::string_view a, std::string_view b) { return iequals(expand_compact(a), expand_compact(b)); }

SipMessage SipMessage::request(Method method, std::string request_uri) {
    return request(std::string(to_string(method)), std::move(request_uri));
}

SipMessage SipMessage::request(std::string method_token, std::string request_uri) {
    SipMessage m;
    m.is_request_ = true;
    m.method_ = parse_method(method_token);
    m.method_token_ = std::move(method_token);
    m.request_uri_ = std::move(request_uri);
    return m;
}

SipMessage SipMessage::response(int status_code, std::string reason) {
    SipMessage m;
    m.is_request_ = false;
    m.status_code_ = status_code;
    m.reason_ = reason.empty() ? std::string(default_reason(status_code)) : std::move(reason);
    return m;
}

std::optional<std::string_view> SipMessage::header(std::string_view name) const {
    for (const auto& h : headers_) {
        if (header_name_equals(h.name, name)) return std::string_view(h.value);
    }
    return std::nullopt;
}

std::vector<std::string_view> SipMessage::header_values(std::string_view name) const {
    std::vector<std::string_view> out;
    for (const auto& h : headers_) {
        if (header_name_equals(h.name, name)) out.emplace_back(h.value);
    }
    return out;
}

SipMessage& SipMessage::add_header(std::string name, std::string value) {
    if (header_name_equals(name, "Content-Length")) return *this;
    headers_.push_back(Header{std::move(name), std::move(value)});
    return *this;
}

SipMessage& SipMessage::push_header(std::string name, std::string value) {
    auto it = std::find_if(headers_.begin(), headers_.end(),
                           [&](const Header& h) { return header_name_equals(h.name, name); });
    if (it == headers_.end()) it = headers_.begin();
    headers_.insert(it, Header{std::move(name), std::move(value)});
    return *this;
}

SipMessage& SipMessage::set_header(std::string name, std::string value) {
    for (auto& h : headers_) {
        if (header_name_equals(h.name, name)) {
            h.value = std::move(value);
            return *this;
        }
    }
    return add_header(std::move(name), std::move(value));
}

bool SipMessage::remove_first(std::string_view name) {
    auto it = std::find_if(headers_.begin(), headers_.end(),
                           [&](const Header& h) { return header_name_equals(h.name, name); });
    if (it == headers_.end()) return false;
    headers_.erase(it);
    return true;
}

std::string SipMessage::call_id() const { return std::string(header("Call-ID").value_or("")); }

std::optional<CSeq> SipMessage::cseq() const {
    auto value = header("CSeq");
    if (!value) return std::nullopt;
    auto v = trim(*value);
    auto space = v.find(' ');
    if (space == std::string_view::npos) return std::nullopt;
    auto number = parse_uint(v.substr(0, space));
    if (!number) return std::nullopt;
    return CSeq{*number, parse_method(trim(v.substr(space + 1)))};
}

std::string SipMessage::top_via_branch() const {
    auto via = header("Via");
    if (!via) return {};
    return header_param(*via, "branch").value_or("");
}

SipMessage parse_message(std::string_view raw) {
    auto head_end = raw.find("\r\n\r\n");
    if (head_end == std::string_view::npos) {
        throw SipParseError(ParseErrc::MalformedStartLine, "no header terminator");
    }
    std::string_view head = raw.substr(0, head_end);
    std::string_view rest = raw.substr(head_end + 4);

    auto line_end = head.find(kCrlf);
    std::string_view start = head.substr(0, line_end);
    std::string_view header_block = line_end == std::string_view::npos ? std::string_view{} : head.substr(line_end + 2);

    SipMessage msg;
    if (start.starts_with(kVersion) && start.size() > kVersion.size() && start[kVersion.size()] == ' ') {
        auto after = start.substr(kVersion.size() + 1);
        auto sp = after.find(' ');
        auto code_text = after.substr(0, sp);
        auto code = parse_uint(code_text);
        if (!code || code_text.size() != 3 || *code < 100 || *code > 699) {
            throw SipParseError(ParseErrc::MalformedStartLine, "bad status code");
        }
        std::string reason = sp == std::string_view::npos ? std::string() : std::string(after.substr(sp + 1));
        msg = SipMessage::response(static_cast<int>(*code));
        msg.reason_ = std::move(reason);
    } else {
        auto sp1 = start.find(' ');
        auto sp2 = sp1 == std::string_view::npos ? sp1 : start.find(' ', sp1 + 1);
        if (sp1 == std::string_view::npos || sp2 == std::string_view::npos) {
            throw SipParseError(ParseErrc::MalformedStartLine, "expected 'METHOD URI SIP/2.0'");
        }
        auto method = start.substr(0, sp1);
        auto uri = start.substr(sp1 + 1, sp2 - sp1 - 1);
        auto version = start.substr(sp2 + 1);
        if (!is_token(method) || uri.empty() || version != kVersion) {
            throw SipParseError(ParseErrc::MalformedStartLine, "bad request line");
        }
        msg = SipMessage::request(std::string(method), std::string(uri));
    }

    std::optional<std::size_t> content_length;
    while (!header_block.empty()) {
        auto eol = header_block.find(kCrlf);
        auto line = header_block.substr(0, eol);
        header_block = eol == std::string_view::npos ? std::string_view{} : header_block.substr(eol + 2);
        if (line.empty()) throw SipParseError(ParseErrc::MalformedHeader, "empty header line");
        if (line.front() == ' ' || line.front() == '\t') {
            throw SipParseError(ParseErrc::MalformedHeader, "folded header lines are not supported");
        }
        auto colon = line.find(':');
        if (colon == std::string_view::npos) throw SipParseError(ParseErrc::MalformedHeader, "missing ':'");
        auto name = trim(line.substr(0, colon));
        auto value = trim(line.substr(colon + 1));
        if (!is_token(name)) throw SipParseError(ParseErrc::MalformedHeader, "bad header name");
        if (header_name_equals(name, "Content-Length")) {
            auto n = parse_uint(value);
            if (!n) throw SipParseError(ParseErrc::BadContentLength, "not a number");
            if (!content_length) content_length = *n;
            continue;
        }
        msg.headers_.push_back(Header{std::string(name), std::string(value)});
    }

    for (std::string_view mandatory : {"Via", "From", "To", "Call-ID", "CSeq"}) {
        if (!msg.has_header(mandatory)) {
            throw SipParseError(ParseErrc::MissingMandatoryHeader, std::string(mandatory));
        }
    }
    if (!msg.cseq()) throw SipParseError(ParseErrc::MalformedHeader, "bad CSeq");

    if (content_length) {
        if (*content_length > rest.size()) {
            throw SipParseError(ParseErrc::BadContentLength, "declared length exceeds datagram");
        }
        msg.body_ = std::string(rest.substr(0, *content_length));
    } else {
        msg.body_ = std::string(rest);
    }
    return msg;
}

std::string serialize_message(const SipMessage& msg) {
    std::string out;
    out.reserve(256 + msg.body().size());
    if (msg.is_request()) {
        out.append(msg.method_token()).append(" ").append(msg.request_uri()).append(" ").append(kVersion);
    } else {
        out.append(kVersion).append(" ").append(std::to_string(msg.status_code())).append(" ").append(msg.reason_phrase());
    }
    out.append(kCrlf);
    for (const auto& h : msg.headers()) {
        out.append(h.name).append(": ").append(h.value).append(kCrlf);
    }
    out.append("Content-Length: ").append(std::to_string(msg.body().size())).append(kCrlf);
    out.append(kCrlf);
    out.append(msg.body());
    return out;
}

SipMessage make_response(const SipMessage& req, int status_code, std::string_view to_tag) {
    auto resp = SipMessage::response(status_code);
    for (const auto& h : req.headers()) {
        if (header_name_equals(h.name, "Via") || header_name_equals(h.name, "From") ||
            header_name_equals(h.name, "Call-ID") || header_name_equals(h.name, "CSeq")) {
            resp.add_header(h.name, h.value);
        } else if (header_name_equals(h.name, "To")) {
            std::string to = h.value;
            if (!to_tag.empty() && !header_param(to, "tag")) to += ";tag=" + std::string(to_tag);
            resp.add_header(h.name, to);
        }
    }
    return resp;
}

}  // namespace voipbed::sip

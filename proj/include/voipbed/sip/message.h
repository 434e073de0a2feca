#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace voipbed::sip {

// The five methods the testbed routes. Any other token parses as Unknown and
// keeps its text in method_token().
enum class Method { Register, Invite, Ack, Bye, Cancel, Unknown };

std::string_view to_string(Method m);
Method parse_method(std::string_view token);

// Status codes the testbed acts on; anything else is counted as unexpected.
bool is_supported_status(int code);
std::string_view default_reason(int code);

struct Header {
    std::string name;
    std::string value;
    bool operator==(const Header&) const = default;
};

struct CSeq {
    std::uint32_t number = 0;
    Method method = Method::Unknown;
};

class SipMessage;
SipMessage parse_message(std::string_view raw);

enum class ParseErrc { MalformedStartLine, MalformedHeader, MissingMandatoryHeader, BadContentLength };

std::string_view to_string(ParseErrc code);

class SipParseError : public std::runtime_error {
  public:
    SipParseError(ParseErrc code, const std::string& detail);
    ParseErrc code() const { return code_; }

  private:
    ParseErrc code_;
};

// A SIP request or response. Headers keep insertion order and are matched
// case-insensitively (compact forms included). Content-Length is not stored;
// it is derived from the body when serializing.
class SipMessage {
  public:
    static SipMessage request(Method method, std::string request_uri);
    static SipMessage request(std::string method_token, std::string request_uri);
    static SipMessage response(int status_code, std::string reason = {});

    bool is_request() const { return is_request_; }
    bool is_response() const { return !is_request_; }

    Method method() const { return method_; }
    const std::string& method_token() const { return method_token_; }
    const std::string& request_uri() const { return request_uri_; }
    void set_request_uri(std::string uri) { request_uri_ = std::move(uri); }

    int status_code() const { return status_code_; }
    const std::string& reason_phrase() const { return reason_; }

    const std::vector<Header>& headers() const { return headers_; }
    std::optional<std::string_view> header(std::string_view name) const;
    std::vector<std::string_view> header_values(std::string_view name) const;
    bool has_header(std::string_view name) const { return header(name).has_value(); }

    // Appends a header. Content-Length is ignored (derived on serialize).
    SipMessage& add_header(std::string name, std::string value);
    // Inserts above the first header with the same name (Via push).
    SipMessage& push_header(std::string name, std::string value);
    // Replaces the first header with this name, or appends.
    SipMessage& set_header(std::string name, std::string value);
    bool remove_first(std::string_view name);

    const std::string& body() const { return body_; }
    void set_body(std::string body) { body_ = std::move(body); }

    std::string call_id() const;
    std::optional<CSeq> cseq() const;
    std::string top_via_branch() const;

    bool operator==(const SipMessage&) const = default;

  private:
    friend SipMessage parse_message(std::string_view raw);

    bool is_request_ = true;
    Method method_ = Method::Unknown;
    std::string method_token_;
    std::string request_uri_;
    int status_code_ = 0;
    std::string reason_;
    std::vector<Header> headers_;
    std::string body_;
};

bool header_name_equals(std::string_view a, std::string_view b);

// Throws SipParseError. `raw` must be one complete datagram.
SipMessage parse_message(std::string_view raw);
std::string serialize_message(const SipMessage& msg);

// Builds a response carrying Via/From/To/Call-ID/CSeq from `req`. When
// `to_tag` is non-empty and To has no tag yet, it is appended.
SipMessage make_response(const SipMessage& req, int status_code, std::string_view to_tag = {});

}  // namespace voipbed::sip

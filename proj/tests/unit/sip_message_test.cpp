#include <doctest.h>

#include <random>
#include <regex>

#include "voipbed/sip/message.h"
#include "voipbed/sip/uri.h"

using namespace voipbed::sip;

namespace {

const char* kInvite =
    "INVITE sip:2003@gw.example SIP/2.0\r\n"
    "Via: SIP/2.0/UDP 10.0.0.1:5060;branch=z9hG4bK776asdhds\r\n"
    "Max-Forwards: 70\r\n"
    "To: <sip:2003@gw.example>\r\n"
    "From: Alice <sip:alice@ims.test>;tag=1928301774\r\n"
    "Call-ID: a84b4c76e66710@pc33.ims.test\r\n"
    "CSeq: 314159 INVITE\r\n"
    "Contact: <sip:alice@10.0.0.1:5060>\r\n"
    "X-Custom:   keep  me \r\n"
    "Content-Length: 0\r\n"
    "\r\n";

const char* kRinging =
    "SIP/2.0 180 Ringing\r\n"
    "Via: SIP/2.0/UDP 10.0.0.1:5060;branch=z9hG4bK776asdhds\r\n"
    "To: <sip:2003@gw.example>;tag=a6c85cf\r\n"
    "From: Alice <sip:alice@ims.test>;tag=1928301774\r\n"
    "Call-ID: a84b4c76e66710@pc33.ims.test\r\n"
    "CSeq: 314159 INVITE\r\n"
    "\r\n";

// Builds a random but valid message from the constructors only.
SipMessage random_message(std::mt19937_64& rng, int index) {
    const Method methods[] = {Method::Register, Method::Invite, Method::Ack, Method::Bye, Method::Cancel};
    const int codes[] = {100, 180, 200, 404, 486, 500};
    std::uniform_int_distribution<int> pick(0, 1000);

    SipMessage m = pick(rng) % 2 == 0
                       ? SipMessage::request(methods[pick(rng) % 5], "sip:" + std::to_string(pick(rng)) + "@ims.test")
                       : SipMessage::response(codes[pick(rng) % 6]);
    const std::string n = std::to_string(index);
    m.add_header("Via", "SIP/2.0/UDP 127.0.0.1:" + std::to_string(5000 + index) + ";branch=z9hG4bK" + n);
    if (pick(rng) % 3 == 0) m.add_header("Via", "SIP/2.0/UDP 10.1.1.1;branch=z9hG4bKold" + n);
    m.add_header(pick(rng) % 2 ? "From" : "f", "<sip:caller" + n + "@ims.test>;tag=" + std::to_string(pick(rng)));
    m.add_header(pick(rng) % 2 ? "To" : "t", "<sip:callee" + n + "@ims.test>");
    m.add_header(pick(rng) % 2 ? "Call-ID" : "i", "call-" + n + "@host");
    m.add_header("CSeq", std::to_string(pick(rng) + 1) + " " + std::string(to_string(methods[pick(rng) % 5])));
    if (pick(rng) % 2) m.add_header("Contact", "<sip:u" + n + "@127.0.0.1:" + std::to_string(6000 + index) + ">");
    if (pick(rng) % 2) m.add_header("Max-Forwards", "70");
    for (int i = pick(rng) % 4; i > 0; --i) m.add_header("X-Extra-" + std::to_string(i), "v" + std::to_string(pick(rng)));
    std::string body(static_cast<std::size_t>(pick(rng) % 40), 'a');
    for (auto& c : body) c = static_cast<char>('a' + pick(rng) % 26);
    if (pick(rng) % 4 == 0) body += "\r\nline2";
    m.set_body(body);
    return m;
}

}  // namespace

TEST_CASE("parse request: start line and headers") {
    auto m = parse_message(kInvite);
    CHECK(m.is_request());
    CHECK(m.method() == Method::Invite);
    CHECK(m.request_uri() == "sip:2003@gw.example");
    CHECK(m.call_id() == "a84b4c76e66710@pc33.ims.test");
    CHECK(m.cseq()->number == 314159);
    CHECK(m.cseq()->method == Method::Invite);
    CHECK(m.top_via_branch() == "z9hG4bK776asdhds");
    CHECK(m.header("x-custom") == "keep  me");
    CHECK(m.body().empty());
}

TEST_CASE("parse response: 180 Ringing") {
    auto m = parse_message(kRinging);
    CHECK(m.is_response());
    CHECK(m.status_code() == 180);
    CHECK(m.reason_phrase() == "Ringing");
    CHECK(is_supported_status(m.status_code()));
}

TEST_CASE("parse errors") {
    auto code_of = [](std::string_view raw) {
        try {
            parse_message(raw);
        } catch (const SipParseError& e) {
            return e.code();
        }
        FAIL("expected a parse error");
        return ParseErrc::MalformedStartLine;
    };
    CHECK(code_of("GARBAGE\r\n\r\n") == ParseErrc::MalformedStartLine);
    CHECK(code_of("SIP/2.0 99 Bad\r\n\r\n") == ParseErrc::MalformedStartLine);
    CHECK(code_of("INVITE sip:a@b SIP/3.0\r\n\r\n") == ParseErrc::MalformedStartLine);
    CHECK(code_of("no terminator") == ParseErrc::MalformedStartLine);

    std::string missing = kInvite;
    missing.erase(missing.find("Call-ID"), missing.find("CSeq") - missing.find("Call-ID"));
    CHECK(code_of(missing) == ParseErrc::MissingMandatoryHeader);

    std::string folded = kInvite;
    folded.insert(folded.find("X-Custom"), " continued\r\n");
    CHECK(code_of(folded) == ParseErrc::MalformedHeader);

    std::string too_long = kInvite;
    too_long.replace(too_long.find("Content-Length: 0"), 17, "Content-Length: 9");
    CHECK(code_of(too_long) == ParseErrc::BadContentLength);
    std::string not_number = kInvite;
    not_number.replace(not_number.find("Content-Length: 0"), 17, "Content-Length: x");
    CHECK(code_of(not_number) == ParseErrc::BadContentLength);
}

TEST_CASE("unknown methods and statuses parse") {
    std::string raw = kInvite;
    raw.replace(0, 6, "OPTIONS");
    auto m = parse_message(raw);
    CHECK(m.method() == Method::Unknown);
    CHECK(m.method_token() == "OPTIONS");

    std::string resp = kRinging;
    resp.replace(8, 11, "603 Decline");
    auto r = parse_message(resp);
    CHECK(r.status_code() == 603);
    CHECK_FALSE(is_supported_status(603));
}

TEST_CASE("serialize: status line and content length") {
    auto r = SipMessage::response(180);
    r.add_header("Via", "SIP/2.0/UDP h;branch=z9hG4bK1");
    CHECK(serialize_message(r).starts_with("SIP/2.0 180 Ringing\r\n"));

    auto q = SipMessage::request(Method::Invite, "sip:a@b");
    q.add_header("Content-Length", "999");  // ignored
    q.set_body("abcd");
    auto wire = serialize_message(q);
    CHECK(wire.find("Content-Length: 4\r\n") != std::string::npos);
    CHECK(wire.find("999") == std::string::npos);
    CHECK(wire.ends_with("\r\n\r\nabcd"));
}

TEST_CASE("serialize keeps header insertion order") {
    auto m = parse_message(kInvite);
    auto wire = serialize_message(m);
    std::vector<std::size_t> pos;
    for (const char* h : {"Via:", "Max-Forwards:", "To:", "From:", "Call-ID:", "CSeq:", "Contact:", "X-Custom:"}) {
        pos.push_back(wire.find(h));
    }
    CHECK(std::is_sorted(pos.begin(), pos.end()));
}

TEST_CASE("round trip over a 50-message corpus") {
    std::mt19937_64 rng(20080101);
    // Content-Length oracle: read the declared value with a regex and compare
    // it to the byte count after the blank line.
    const std::regex cl_re("\r\nContent-Length: ([0-9]+)\r\n\r\n");
    for (int i = 0; i < 50; ++i) {
        CAPTURE(i);
        auto m = random_message(rng, i);
        auto wire = serialize_message(m);
        auto parsed = parse_message(wire);
        CHECK(parsed == m);
        CHECK(serialize_message(parsed) == wire);

        std::smatch match;
        REQUIRE(std::regex_search(wire, match, cl_re));
        auto declared = std::stoul(match[1]);
        auto body_start = static_cast<std::size_t>(match.position(0) + match.length(0));
        CHECK(declared == wire.size() - body_start);
    }
}

TEST_CASE("compact header names match their long forms") {
    auto m = SipMessage::request(Method::Bye, "sip:x@y");
    m.add_header("i", "abc").add_header("v", "SIP/2.0/UDP h;branch=z9hG4bKq");
    CHECK(m.call_id() == "abc");
    CHECK(m.top_via_branch() == "z9hG4bKq");
    CHECK(header_name_equals("CALL-id", "i"));
}

TEST_CASE("make_response copies dialog headers and adds a To tag") {
    auto req = parse_message(kInvite);
    auto resp = make_response(req, 486, "xyz");
    CHECK(resp.status_code() == 486);
    CHECK(resp.reason_phrase() == "Busy Here");
    CHECK(resp.call_id() == req.call_id());
    CHECK(resp.top_via_branch() == req.top_via_branch());
    CHECK(header_param(*resp.header("To"), "tag") == "xyz");
    CHECK_FALSE(resp.has_header("Contact"));
    CHECK_FALSE(resp.has_header("X-Custom"));
}

TEST_CASE("push_header inserts a new top Via") {
    auto m = parse_message(kInvite);
    m.push_header("Via", "SIP/2.0/UDP 127.0.0.1:5060;branch=z9hG4bKproxy");
    CHECK(m.top_via_branch() == "z9hG4bKproxy");
    CHECK(m.header_values("Via").size() == 2);
    m.remove_first("Via");
    CHECK(m.top_via_branch() == "z9hG4bK776asdhds");
}

TEST_CASE("uri parsing") {
    auto u = SipUri::parse("sip:2003@gw.test");
    REQUIRE(u);
    CHECK(u->user == "2003");
    CHECK(u->host == "gw.test");
    CHECK_FALSE(u->port);
    CHECK_FALSE(u->literal_endpoint());

    auto lit = SipUri::parse("sip:bob@10.0.0.7:5064;transport=udp");
    REQUIRE(lit);
    CHECK(lit->literal_endpoint()->to_string() == "10.0.0.7:5064");
    CHECK(lit->params == "transport=udp");
    CHECK(lit->to_string() == "sip:bob@10.0.0.7:5064;transport=udp");
    CHECK(SipUri::parse("sip:Bob@IMS.Test")->aor_key() == "Bob@ims.test");
    CHECK_FALSE(SipUri::parse("tel:+1234"));
    CHECK_FALSE(SipUri::parse("sip:a@h:0"));

    CHECK(addr_spec("\"Alice\" <sip:alice@ims.test>;tag=1") == "sip:alice@ims.test");
    CHECK(addr_spec("sip:alice@ims.test;tag=1") == "sip:alice@ims.test");
    CHECK(header_param("<sip:a@b;lr>;tag=77", "tag") == "77");
    CHECK_FALSE(header_param("<sip:a@b;tag=no>", "tag"));
}

TEST_CASE("via parsing") {
    auto v = parse_via("SIP/2.0/UDP 127.0.0.1:5070;branch=z9hG4bKabc;rport");
    REQUIRE(v);
    CHECK(v->transport == "UDP");
    CHECK(v->endpoint()->to_string() == "127.0.0.1:5070");
    CHECK(v->branch == "z9hG4bKabc");
    CHECK(parse_via(format_via(voipbed::net::Endpoint::loopback(9), "z9hG4bKx"))->branch == "z9hG4bKx");
    CHECK_FALSE(parse_via("HTTP/1.1 host"));
}

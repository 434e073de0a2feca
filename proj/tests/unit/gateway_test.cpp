#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <thread>

#include "voipbed/gateway/b2bua.h"
#include "voipbed/gateway/dialplan.h"
#include "voipbed/net/udp_socket.h"
#include "voipbed/sip/uri.h"

using namespace voipbed;
using namespace voipbed::gateway;
using namespace std::chrono_literals;
using sip::Method;
using sip::SipMessage;

namespace {

DialplanEntry to_fxs(std::string pattern, std::string ep) {
    return {std::move(pattern), DialplanEntry::Action::ToFxs, std::move(ep), 0};
}

const sip::TxTimers kFast{20ms, 80ms, 4, 200ms};

struct Caller {
    net::UdpSocket sock = net::UdpSocket::bind(net::Endpoint::loopback(0));
    int seq = 0;

    SipMessage invite(const std::string& number, const std::string& tag) {
        auto m = SipMessage::request(Method::Invite, "sip:" + number + "@gw.test");
        m.add_header("Via", sip::format_via(sock.local_endpoint(), "z9hG4bK" + tag));
        m.add_header("Max-Forwards", "70");
        m.add_header("From", "<sip:alice@ims.test>;tag=" + tag);
        m.add_header("To", "<sip:" + number + "@gw.test>");
        m.add_header("Call-ID", "call-" + tag);
        m.add_header("CSeq", "1 INVITE");
        m.add_header("Contact", "<sip:alice@" + sock.local_endpoint().to_string() + ">");
        return m;
    }
    // In-dialog request built from the INVITE and a response carrying the remote tag.
    SipMessage in_dialog(Method method, const SipMessage& inv, const SipMessage& resp, int cseq) {
        auto m = SipMessage::request(method, inv.request_uri());
        m.add_header("Via", sip::format_via(sock.local_endpoint(), "z9hG4bKd" + std::to_string(++seq) + inv.call_id()));
        m.add_header("From", std::string(*inv.header("From")));
        m.add_header("To", std::string(*resp.header("To")));
        m.add_header("Call-ID", inv.call_id());
        m.add_header("CSeq", std::to_string(cseq) + " " + std::string(sip::to_string(method)));
        return m;
    }
    void send(const net::Endpoint& to, const SipMessage& m) { sock.send_to(to, sip::serialize_message(m)); }
    std::optional<SipMessage> wait_for(std::function<bool(const SipMessage&)> pred, std::chrono::milliseconds limit = 3s) {
        auto end = std::chrono::steady_clock::now() + limit;
        while (std::chrono::steady_clock::now() < end) {
            if (!sock.wait_readable(20ms)) continue;
            while (auto d = sock.receive()) {
                auto m = sip::parse_message(d->payload);
                if (pred(m)) return m;
            }
        }
        return std::nullopt;
    }
};

GatewayOptions test_options(net::Duration answer_delay = 100ms) {
    GatewayOptions o;
    o.bind = net::Endpoint::loopback(0);
    o.timers = kFast;
    o.keep_finished = 10s;
    o.endpoints = {{"fxs1", "2003", 0ms, answer_delay, 1}, {"fxs2", "2999", 0ms, answer_delay, 1}};
    o.dialplan = {to_fxs("2003", "fxs1"), to_fxs("_2XXX", "fxs2"), {"2666", DialplanEntry::Action::Reject, "", 0}};
    return o;
}

auto status_is(int code) {
    return [code](const SipMessage& m) { return m.is_response() && m.status_code() == code; };
}

}  // namespace

TEST_CASE("match_dialplan examples") {
    std::vector<DialplanEntry> plan = {to_fxs("2003", "fxs1"), to_fxs("_2XXX", "fxs2")};
    CHECK(match_dialplan("2003", plan)->endpoint == "fxs1");
    CHECK(match_dialplan("2456", plan)->endpoint == "fxs2");
    CHECK_FALSE(match_dialplan("9999", plan));
    CHECK_FALSE(match_dialplan("245", plan));
    CHECK_FALSE(match_dialplan("24567", plan));
}

TEST_CASE("exact beats wildcard regardless of order") {
    std::vector<DialplanEntry> plan = {to_fxs("_2XXX", "wild"), to_fxs("2003", "exact")};
    CHECK(match_dialplan("2003", plan)->endpoint == "exact");
    plan.push_back(to_fxs("2003", "later"));
    CHECK(match_dialplan("2003", plan)->endpoint == "exact");
}

TEST_CASE("permuting non-matching entries never changes the result") {
    std::mt19937_64 rng(7);
    std::vector<DialplanEntry> noise = {to_fxs("1000", "a"), to_fxs("_9XX", "b"), to_fxs("_3XXX", "c"),
                                        to_fxs("55", "d"),   to_fxs("_XXXXX", "e")};
    const auto target = to_fxs("_2XX3", "hit");
    for (int i = 0; i < 200; ++i) {
        auto plan = noise;
        plan.push_back(target);
        std::shuffle(plan.begin(), plan.end(), rng);
        auto m = match_dialplan("2443", plan);
        REQUIRE(m);
        CHECK(m->endpoint == "hit");
    }
}

TEST_CASE("wildcard oracle: every 4-digit number against _2X0X") {
    for (int n = 0; n < 10000; ++n) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "%04d", n);
        const bool expect = buf[0] == '2' && buf[2] == '0';
        CHECK(pattern_matches("_2X0X", buf) == expect);
    }
}

TEST_CASE("parse_dialplan examples and errors") {
    std::set<std::string> ids = {"fxs1", "fxs2"};
    auto one = parse_dialplan("2003 => fxs:fxs1\n", ids);
    REQUIRE(one.size() == 1);
    CHECK_FALSE(one[0].wildcard());
    CHECK(one[0].endpoint == "fxs1");
    auto wild = parse_dialplan("# comment\n\n_2XXX => fxs:fxs2  # trailing\n9 => reject\n", ids);
    REQUIRE(wild.size() == 2);
    CHECK(wild[0].wildcard());
    CHECK(wild[0].line == 3);
    CHECK(wild[1].action == DialplanEntry::Action::Reject);

    auto error_of = [&](std::string_view text) {
        try {
            parse_dialplan(text, ids);
        } catch (const DialplanError& e) {
            return std::make_pair(e.code(), e.line());
        }
        FAIL("expected DialplanError");
        return std::make_pair(DialplanErrc::IoError, -1);
    };
    CHECK(error_of("2003 => fxs:ghost") == std::make_pair(DialplanErrc::UnknownEndpoint, 1));
    CHECK(error_of("2003 => fxs:fxs1\n2004 fxs:fxs1") == std::make_pair(DialplanErrc::SyntaxError, 2));
    CHECK(error_of("_ => reject") == std::make_pair(DialplanErrc::SyntaxError, 1));
    CHECK(error_of("2a03 => reject") == std::make_pair(DialplanErrc::SyntaxError, 1));
    CHECK(error_of("2003 => voicemail") == std::make_pair(DialplanErrc::SyntaxError, 1));
}

TEST_CASE("load_dialplan reads a file and keeps order") {
    auto path = std::filesystem::temp_directory_path() / "voipbed_dialplan_test.txt";
    {
        std::ofstream out(path);
        out << "_2XXX => fxs:fxs2\n2003 => fxs:fxs1\n";
    }
    auto plan = load_dialplan(path, {"fxs1", "fxs2"});
    std::filesystem::remove(path);
    REQUIRE(plan.size() == 2);
    CHECK(plan[0].pattern == "_2XXX");
    CHECK(plan[1].pattern == "2003");
    CHECK_THROWS_AS(load_dialplan(path, {}), DialplanError);
}

TEST_CASE("call state advances forward only") {
    const CallState all[] = {CallState::Setup, CallState::Ringing, CallState::Answered, CallState::TornDown};
    for (auto a : all) {
        for (auto b : all) {
            CHECK(can_advance(a, b) == (a != CallState::TornDown && static_cast<int>(b) > static_cast<int>(a)));
        }
    }
}

TEST_CASE("FXS endpoint validation") {
    auto fxs = [](net::Duration ring, int lines) { return FxsEndpoint{"f", "1", ring, 0ms, lines}; };
    CHECK_NOTHROW(fxs(0ms, 1).validate());
    CHECK_THROWS_AS(fxs(-1ms, 1).validate(), std::invalid_argument);
    CHECK_THROWS_AS(fxs(0ms, 0).validate(), std::invalid_argument);
    auto o = test_options();
    o.dialplan.push_back(to_fxs("7", "ghost"));
    CHECK_THROWS_AS(std::make_unique<GatewayB2bua>(o), std::invalid_argument);
}

TEST_CASE("gateway capacity: 55 call/s sheds nothing, 60 call/s sheds") {
    auto p = server::ServerProfile::gateway_default();
    auto shed_at = [&](double rate) {
        server::WorkQueue q(p.service_cost(), p.max_backlog, p.queue_grace());
        net::TimePoint t{};
        const auto gap = std::chrono::duration_cast<net::Duration>(
            std::chrono::duration<double>(1.0 / (rate * p.signals_per_call)));
        for (int i = 0; i < static_cast<int>(rate * p.signals_per_call * 60); ++i) {
            q.admit(t);
            t += gap;
        }
        return q.stats().shed;
    };
    CHECK(shed_at(55) == 0);
    CHECK(shed_at(60) > 0);
}

TEST_CASE("call to an FXS: 100, 180 after the INVITE delay, 200, ACK, BYE") {
    GatewayB2bua gw(test_options());
    Caller alice;
    auto inv = alice.invite("2003", "c1");
    auto t0 = std::chrono::steady_clock::now();
    alice.send(gw.endpoint(), inv);

    auto trying = alice.wait_for(status_is(100), 100ms);
    CHECK(trying);
    auto ringing = alice.wait_for(status_is(180));
    auto t180 = std::chrono::steady_clock::now();
    REQUIRE(ringing);
    double ms = std::chrono::duration<double, std::milli>(t180 - t0).count();
    CHECK(ms >= 254.5);
    CHECK(ms <= 254.5 + 0.0 + 5.0);
    CHECK(ringing->header("Contact"));

    auto ok = alice.wait_for(status_is(200));
    REQUIRE(ok);
    auto to_tag = sip::header_param(*ok->header("To"), "tag");
    CHECK(to_tag == sip::header_param(*ringing->header("To"), "tag"));
    CHECK(gw.lines_in_use("fxs1") == 1);

    alice.send(gw.endpoint(), alice.in_dialog(Method::Ack, inv, *ok, 1));
    std::this_thread::sleep_for(150ms);
    // Drain anything that raced with the ACK, then no more 200s.
    while (alice.sock.receive()) {}
    CHECK_FALSE(alice.wait_for(status_is(200), 150ms));

    alice.send(gw.endpoint(), alice.in_dialog(Method::Bye, inv, *ok, 2));
    auto bye_ok = alice.wait_for([](const SipMessage& m) {
        return m.is_response() && m.cseq() && m.cseq()->method == Method::Bye;
    });
    REQUIRE(bye_ok);
    CHECK(bye_ok->status_code() == 200);

    auto calls = gw.snapshot();
    REQUIRE(calls.size() == 1);
    CHECK(calls[0].state == CallState::TornDown);
    CHECK_FALSE(calls[0].leg_a_up);
    CHECK_FALSE(calls[0].leg_b_up);
    CHECK(gw.lines_in_use("fxs1") == 0);
    auto s = gw.stats();
    CHECK(s.answered == 1);
    CHECK(s.torn_down == 1);
}

TEST_CASE("second simultaneous call to a single-line FXS gets 486") {
    GatewayB2bua gw(test_options(5s));
    Caller a, b;
    a.send(gw.endpoint(), a.invite("2003", "busy1"));
    REQUIRE(a.wait_for(status_is(180)));
    b.send(gw.endpoint(), b.invite("2003", "busy2"));
    auto final = b.wait_for([](const SipMessage& m) { return m.is_response() && m.status_code() >= 180; });
    REQUIRE(final);
    CHECK(final->status_code() == 486);
    CHECK(gw.stats().busy == 1);
}

TEST_CASE("unmatched and rejected numbers get 404") {
    GatewayB2bua gw(test_options());
    Caller a;
    a.send(gw.endpoint(), a.invite("9999", "nm"));
    auto r = a.wait_for([](const SipMessage& m) { return m.is_response() && m.status_code() >= 180; });
    REQUIRE(r);
    CHECK(r->status_code() == 404);
    a.send(gw.endpoint(), a.invite("2666", "rj"));
    r = a.wait_for([](const SipMessage& m) { return m.is_response() && m.call_id() == "call-rj" && m.status_code() >= 180; });
    REQUIRE(r);
    CHECK(r->status_code() == 404);
    CHECK(gw.stats().not_found == 2);
}

TEST_CASE("every 200 pairs with exactly one answered FXS leg") {
    auto o = test_options(50ms);
    o.endpoints = {{"bank", "3000", 0ms, 50ms, 8}};
    o.dialplan = {to_fxs("3000", "bank")};
    GatewayB2bua gw(o);
    Caller a;
    std::vector<SipMessage> invites;
    for (int i = 0; i < 8; ++i) {
        invites.push_back(a.invite("3000", "pair" + std::to_string(i)));
        a.send(gw.endpoint(), invites.back());
    }
    std::set<std::string> answered_calls;
    auto end = std::chrono::steady_clock::now() + 3s;
    while (answered_calls.size() < 8 && std::chrono::steady_clock::now() < end) {
        if (auto ok = a.wait_for(status_is(200), 200ms)) {
            answered_calls.insert(ok->call_id());
            auto inv = std::find_if(invites.begin(), invites.end(), [&](auto& m) { return m.call_id() == ok->call_id(); });
            a.send(gw.endpoint(), a.in_dialog(Method::Ack, *inv, *ok, 1));
        }
    }
    CHECK(answered_calls.size() == 8);
    CHECK(gw.lines_in_use("bank") == 8);
    auto calls = gw.snapshot();
    CHECK(std::count_if(calls.begin(), calls.end(), [](auto& c) { return c.state == CallState::Answered; }) == 8);
    CHECK(gw.stats().answered == 8);
}

TEST_CASE("FXS hangup sends BYE to the caller and ends both legs") {
    GatewayB2bua gw(test_options(20ms));
    Caller a;
    auto inv = a.invite("2003", "hang");
    a.send(gw.endpoint(), inv);
    auto ok = a.wait_for(status_is(200));
    REQUIRE(ok);
    a.send(gw.endpoint(), a.in_dialog(Method::Ack, inv, *ok, 1));
    CHECK(gw.hangup_from_fxs(inv.call_id()));
    auto bye = a.wait_for([](const SipMessage& m) { return m.is_request() && m.method() == Method::Bye; });
    REQUIRE(bye);
    CHECK(bye->call_id() == inv.call_id());
    CHECK(sip::header_param(*bye->header("From"), "tag") == sip::header_param(*ok->header("To"), "tag"));
    a.send(gw.endpoint(), sip::make_response(*bye, 200));
    CHECK(gw.lines_in_use("fxs1") == 0);
    CHECK_FALSE(gw.hangup_from_fxs(inv.call_id()));
}

TEST_CASE("CANCEL while ringing gives 200 and 487") {
    GatewayB2bua gw(test_options(5s));
    Caller a;
    auto inv = a.invite("2003", "cx");
    a.send(gw.endpoint(), inv);
    REQUIRE(a.wait_for(status_is(180)));
    auto cancel = SipMessage::request(Method::Cancel, inv.request_uri());
    cancel.add_header("Via", std::string(*inv.header("Via")));
    cancel.add_header("From", std::string(*inv.header("From")));
    cancel.add_header("To", std::string(*inv.header("To")));
    cancel.add_header("Call-ID", inv.call_id());
    cancel.add_header("CSeq", "1 CANCEL");
    a.send(gw.endpoint(), cancel);
    bool got200 = false, got487 = false;
    auto end = std::chrono::steady_clock::now() + 2s;
    while (!(got200 && got487) && std::chrono::steady_clock::now() < end) {
        auto r = a.wait_for([](const SipMessage& m) { return m.is_response() && m.status_code() >= 200; }, 200ms);
        if (!r) continue;
        if (r->cseq()->method == Method::Cancel) got200 = r->status_code() == 200;
        if (r->cseq()->method == Method::Invite) got487 = r->status_code() == 487;
    }
    CHECK(got200);
    CHECK(got487);
    CHECK(gw.lines_in_use("fxs1") == 0);
}

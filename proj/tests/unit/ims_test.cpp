#include <doctest.h>

#include <chrono>
#include <sstream>
#include <thread>

#include "voipbed/enumdns/enum_server.h"
#include "voipbed/ims/registrar_proxy.h"
#include "voipbed/ims/routing.h"
#include "voipbed/net/udp_socket.h"
#include "voipbed/sip/uri.h"

using namespace voipbed;
using namespace voipbed::ims;
using namespace std::chrono_literals;
using sip::Method;
using sip::SipMessage;

namespace {

SipMessage make_register(const std::string& user, const std::string& contact, std::optional<int> expires = {}) {
    auto m = SipMessage::request(Method::Register, "sip:ims.test");
    m.add_header("Via", "SIP/2.0/UDP 10.0.0.5:5062;branch=z9hG4bKreg" + user);
    m.add_header("From", "<sip:" + user + "@ims.test>;tag=r1");
    m.add_header("To", "<sip:" + user + "@ims.test>");
    m.add_header("Call-ID", "reg-" + user);
    m.add_header("CSeq", "1 REGISTER");
    if (!contact.empty()) m.add_header("Contact", "<" + contact + ">");
    if (expires) m.add_header("Expires", std::to_string(*expires));
    return m;
}

SipMessage make_invite(const std::string& ruri, const std::string& branch = "z9hG4bKinv") {
    auto m = SipMessage::request(Method::Invite, ruri);
    m.add_header("Via", "SIP/2.0/UDP 127.0.0.1:5999;branch=" + branch);
    m.add_header("Max-Forwards", "70");
    m.add_header("From", "<sip:alice@ims.test>;tag=a1");
    m.add_header("To", "<" + ruri + ">");
    m.add_header("Call-ID", "call-" + branch);
    m.add_header("CSeq", "1 INVITE");
    m.add_header("Contact", "<sip:alice@127.0.0.1:5999>");
    return m;
}

std::optional<SipMessage> receive(net::UdpSocket& s, std::chrono::milliseconds limit = 1000ms) {
    if (!s.wait_readable(limit)) return std::nullopt;
    auto d = s.receive();
    if (!d) return std::nullopt;
    return sip::parse_message(d->payload);
}

}  // namespace

TEST_CASE("register stores a binding and echoes it") {
    LocationStore db;
    auto resp = handle_register(make_register("alice", "sip:alice@10.0.0.5:5062"), db);
    CHECK(resp.status_code() == 200);
    REQUIRE(resp.header("Contact"));
    CHECK(resp.header("Contact")->find("sip:alice@10.0.0.5:5062") != std::string::npos);
    auto b = db.lookup("alice@ims.test");
    REQUIRE(b);
    CHECK(b->contact.to_string() == "10.0.0.5:5062");
    CHECK(b->expires == 3600);
}

TEST_CASE("register: last write wins, repeats are idempotent, expires 0 removes") {
    LocationStore db;
    for (int i = 0; i < 5; ++i) handle_register(make_register("alice", "sip:alice@10.0.0.5:5062"), db);
    CHECK(db.size() == 1);
    handle_register(make_register("alice", "sip:alice@10.0.0.6:5070", 60), db);
    CHECK(db.size() == 1);
    CHECK(db.lookup("alice@ims.test")->contact.to_string() == "10.0.0.6:5070");
    CHECK(db.lookup("alice@ims.test")->expires == 60);
    handle_register(make_register("alice", "sip:alice@10.0.0.6:5070", 0), db);
    CHECK(db.size() == 0);
}

TEST_CASE("register without a usable contact is rejected") {
    LocationStore db;
    CHECK(handle_register(make_register("alice", ""), db).status_code() == 400);
    CHECK(handle_register(make_register("alice", "sip:alice@pc.ims.test"), db).status_code() == 400);
    CHECK(db.size() == 0);
}

TEST_CASE("expired bindings are not found") {
    LocationStore db;
    auto t0 = net::EventLoop::now();
    handle_register(make_register("alice", "sip:alice@10.0.0.5:5062", 10), db, t0);
    CHECK(db.lookup("alice@ims.test", t0 + 9s));
    CHECK_FALSE(db.lookup("alice@ims.test", t0 + 11s));
}

TEST_CASE("location dump is sorted by AOR") {
    LocationStore db;
    handle_register(make_register("zed", "sip:zed@10.0.0.9:5000"), db);
    handle_register(make_register("amy", "sip:amy@10.0.0.8:5000"), db);
    std::ostringstream out;
    db.dump(out);
    auto text = out.str();
    CHECK(text.find("amy@ims.test") < text.find("zed@ims.test"));
}

TEST_CASE("route_invite: examples") {
    LocationStore db;
    handle_register(make_register("bob", "sip:bob@10.0.0.7:5064"), db);
    RoutingContext ctx;
    ctx.enum_enabled = true;
    ctx.hosts["gw.test"] = *net::Endpoint::parse("10.0.0.20:5070");

    int lookups = 0;
    auto resolver = [&](const enumdns::E164Number& n) -> enumdns::ResolveResult {
        ++lookups;
        if (n.digits() == "2003") return std::string("sip:2003@gw.test");
        if (n.digits() == "1002") return std::string("sip:bob@ims.test");
        if (n.digits() == "9999") return enumdns::EnumError(enumdns::EnumErrc::Timeout, "t");
        return enumdns::EnumError(enumdns::EnumErrc::Nxdomain, "n");
    };

    auto bob = route_invite(make_invite("sip:bob@ims.test"), db, ctx, resolver);
    CHECK(bob.kind == RouteDecision::Kind::Forward);
    CHECK(bob.target.to_string() == "10.0.0.7:5064");
    CHECK(bob.request_uri == "sip:bob@10.0.0.7:5064");
    CHECK_FALSE(bob.enum_consulted);
    CHECK(lookups == 0);

    auto pstn = route_invite(make_invite("sip:2003@ims.test"), db, ctx, resolver);
    CHECK(pstn.kind == RouteDecision::Kind::Forward);
    CHECK(pstn.target.to_string() == "10.0.0.20:5070");
    CHECK(pstn.request_uri == "sip:2003@gw.test");
    CHECK(pstn.enum_consulted);

    auto to_pc = route_invite(make_invite("sip:1002@ims.test"), db, ctx, resolver);
    CHECK(to_pc.target.to_string() == "10.0.0.7:5064");
    CHECK(to_pc.request_uri == "sip:bob@10.0.0.7:5064");

    CHECK(route_invite(make_invite("sip:nobody@ims.test"), db, ctx, resolver).status == 404);
    CHECK(route_invite(make_invite("sip:5555@ims.test"), db, ctx, resolver).status == 404);
    auto slow = route_invite(make_invite("sip:9999@ims.test"), db, ctx, resolver);
    CHECK(slow.kind == RouteDecision::Kind::Respond);
    CHECK(slow.status == 500);

    ctx.enum_enabled = false;
    CHECK(route_invite(make_invite("sip:2003@ims.test"), db, ctx, resolver).status == 404);
}

TEST_CASE("route_invite is deterministic for a fixed store and resolver") {
    LocationStore db;
    for (int i = 0; i < 20; ++i) {
        handle_register(make_register("u" + std::to_string(i), "sip:u@10.0.1." + std::to_string(i + 1) + ":5060"), db);
    }
    RoutingContext ctx;
    ctx.enum_enabled = true;
    auto resolver = [](const enumdns::E164Number& n) -> enumdns::ResolveResult {
        return "sip:u" + std::to_string(std::stoi(n.digits()) % 25) + "@ims.test";
    };
    for (int i = 0; i < 50; ++i) {
        for (auto ruri : {"sip:u" + std::to_string(i % 25) + "@ims.test", "sip:" + std::to_string(100 + i) + "@ims.test"}) {
            auto a = route_invite(make_invite(ruri), db, ctx, resolver);
            auto b = route_invite(make_invite(ruri), db, ctx, resolver);
            CHECK(a == b);
            // Forward iff the final AOR is registered.
            if (a.kind == RouteDecision::Kind::Respond) CHECK(a.status == 404);
        }
    }
}

TEST_CASE("proxy relays INVITE and 180 with the profile delays") {
    ImsOptions opts;
    opts.bind = net::Endpoint::loopback(0);
    RegistrarProxy proxy(opts);
    auto uac = net::UdpSocket::bind(net::Endpoint::loopback(0));
    auto uas = net::UdpSocket::bind(net::Endpoint::loopback(0));

    auto reg = make_register("bob", "sip:bob@" + uas.local_endpoint().to_string());
    uas.send_to(proxy.endpoint(), sip::serialize_message(reg));
    auto ok = receive(uas);
    REQUIRE(ok);
    CHECK(ok->status_code() == 200);

    auto inv = make_invite("sip:bob@ims.test", "z9hG4bKrelay");
    inv.set_header("Via", sip::format_via(uac.local_endpoint(), "z9hG4bKrelay"));
    auto t0 = std::chrono::steady_clock::now();
    uac.send_to(proxy.endpoint(), sip::serialize_message(inv));

    auto trying = receive(uac);
    REQUIRE(trying);
    CHECK(trying->status_code() == 100);

    auto fwd = receive(uas);
    REQUIRE(fwd);
    CHECK(fwd->method() == Method::Invite);
    CHECK(fwd->request_uri() == "sip:bob@" + uas.local_endpoint().to_string());
    CHECK(fwd->header_values("Via").size() == 2);
    CHECK(fwd->header("Max-Forwards") == "69");

    auto ringing = sip::make_response(*fwd, 180, "uas");
    uas.send_to(proxy.endpoint(), sip::serialize_message(ringing));
    auto back = receive(uac);
    auto t1 = std::chrono::steady_clock::now();
    REQUIRE(back);
    CHECK(back->status_code() == 180);
    CHECK(back->header_values("Via").size() == 1);
    CHECK(back->top_via_branch() == "z9hG4bKrelay");

    double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    CHECK(ms >= 3.92);
    CHECK(ms <= 3.92 + 2.0);
    CHECK(proxy.stats().forwarded == 1);
}

TEST_CASE("proxy uses ENUM for numeric users and rejects unknown numbers") {
    auto zone = std::make_shared<enumdns::EnumZone>("e164.test");
    zone->add(enumdns::E164Number::parse("2003"), {100, 10, "u", "E2U+sip", "!^.*$!sip:2003@gw.test!", ".", 300});
    enumdns::EnumServer srv(zone, net::Endpoint::loopback(0));

    auto gw = net::UdpSocket::bind(net::Endpoint::loopback(0));
    ImsOptions opts;
    opts.bind = net::Endpoint::loopback(0);
    opts.enum_enabled = true;
    opts.resolver = enumdns::ResolverOptions{srv.endpoint(), "e164.test", 500ms, 1};
    opts.hosts["gw.test"] = gw.local_endpoint();
    RegistrarProxy proxy(opts);
    auto uac = net::UdpSocket::bind(net::Endpoint::loopback(0));

    auto inv = make_invite("sip:2003@ims.test", "z9hG4bKenum");
    inv.set_header("Via", sip::format_via(uac.local_endpoint(), "z9hG4bKenum"));
    uac.send_to(proxy.endpoint(), sip::serialize_message(inv));
    auto fwd = receive(gw);
    REQUIRE(fwd);
    CHECK(fwd->request_uri() == "sip:2003@gw.test");
    CHECK(proxy.stats().enum_lookups == 1);
    CHECK(proxy.enum_latencies().size() == 1);

    auto miss = make_invite("sip:7777@ims.test", "z9hG4bKmiss");
    miss.set_header("Via", sip::format_via(uac.local_endpoint(), "z9hG4bKmiss"));
    uac.send_to(proxy.endpoint(), sip::serialize_message(miss));
    std::optional<SipMessage> final;
    while (auto m = receive(uac)) {
        if (m->top_via_branch() == "z9hG4bKmiss" && m->status_code() >= 200) {
            final = m;
            break;
        }
    }
    REQUIRE(final);
    CHECK(final->status_code() == 404);
}

TEST_CASE("proxy answers keepalives and drops malformed datagrams") {
    ImsOptions opts;
    opts.bind = net::Endpoint::loopback(0);
    RegistrarProxy proxy(opts);
    auto peer = net::UdpSocket::bind(net::Endpoint::loopback(0));
    peer.send_to(proxy.endpoint(), std::string_view("\r\n\r\n"));
    REQUIRE(peer.wait_readable(1s));
    CHECK(peer.receive()->payload == "\r\n");
    peer.send_to(proxy.endpoint(), std::string_view("GARBAGE\r\n\r\n"));
    for (int i = 0; i < 100 && proxy.stats().malformed == 0; ++i) std::this_thread::sleep_for(2ms);
    CHECK(proxy.stats().malformed == 1);
}

TEST_CASE("proxy sheds signals beyond its capacity") {
    ImsOptions opts;
    opts.bind = net::Endpoint::loopback(0);
    opts.profile.capacity = 5;  // 30 signals/s with 6 per call
    opts.profile.cpu_curve.clear();
    opts.profile.max_backlog = 100ms;
    RegistrarProxy proxy(opts);
    auto peer = net::UdpSocket::bind(net::Endpoint::loopback(0));
    for (int i = 0; i < 40; ++i) {
        peer.send_to(proxy.endpoint(), sip::serialize_message(make_register("u" + std::to_string(i), "sip:u@127.0.0.1:9")));
    }
    for (int i = 0; i < 200 && proxy.stats().received < 40; ++i) std::this_thread::sleep_for(2ms);
    // Backlog of 100 ms at 1/30 s per signal admits about 4 of a burst.
    CHECK(proxy.stats().shed >= 30);
    CHECK(proxy.queue_stats().shed == proxy.stats().shed);
}

TEST_CASE("100 Trying from downstream costs no queue work") {
    ImsOptions opts;
    opts.bind = net::Endpoint::loopback(0);
    opts.profile.capacity = 5;
    opts.profile.cpu_curve.clear();
    opts.profile.max_backlog = 100ms;
    RegistrarProxy proxy(opts);
    auto peer = net::UdpSocket::bind(net::Endpoint::loopback(0));
    for (int i = 0; i < 40; ++i) {
        auto trying = sip::SipMessage::response(100);
        trying.add_header("Via", "SIP/2.0/UDP 127.0.0.1:9;branch=z9hG4bKtry" + std::to_string(i));
        trying.add_header("From", "<sip:a@ims.test>;tag=1");
        trying.add_header("To", "<sip:b@ims.test>");
        trying.add_header("Call-ID", "try-" + std::to_string(i));
        trying.add_header("CSeq", "1 INVITE");
        peer.send_to(proxy.endpoint(), sip::serialize_message(trying));
    }
    for (int i = 0; i < 200 && proxy.stats().received < 40; ++i) std::this_thread::sleep_for(2ms);
    CHECK(proxy.stats().received == 40);
    CHECK(proxy.stats().shed == 0);
    CHECK(proxy.queue_stats().admitted == 0);
}

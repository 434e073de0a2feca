#include <doctest.h>

#include <atomic>
#include <chrono>
#include <thread>

#include "voipbed/net/endpoint.h"
#include "voipbed/net/event_loop.h"
#include "voipbed/net/udp_socket.h"
#include "voipbed/server/profile.h"
#include "voipbed/server/work_queue.h"

using namespace voipbed;
using namespace std::chrono_literals;

TEST_CASE("endpoint parse and format") {
    auto ep = net::Endpoint::parse("127.0.0.1:5060");
    REQUIRE(ep);
    CHECK(ep->address == 0x7f000001);
    CHECK(ep->port == 5060);
    CHECK(ep->to_string() == "127.0.0.1:5060");
    CHECK(net::Endpoint::parse("10.0.0.5", 5062)->to_string() == "10.0.0.5:5062");
    CHECK(net::Endpoint::parse("localhost:7")->address == net::kLoopbackAddress);
    CHECK_FALSE(net::Endpoint::parse("gw.test:5070"));
    CHECK_FALSE(net::Endpoint::parse("1.2.3.4:99999"));
    CHECK_FALSE(net::Endpoint::parse(""));
}

TEST_CASE("udp loopback send/receive") {
    auto a = net::UdpSocket::bind(net::Endpoint::loopback(0));
    auto b = net::UdpSocket::bind(net::Endpoint::loopback(0));
    REQUIRE(a.local_endpoint().port != 0);
    CHECK(a.send_to(b.local_endpoint(), std::string_view("ping")));
    REQUIRE(b.wait_readable(1s));
    auto d = b.receive();
    REQUIRE(d);
    CHECK(d->payload == "ping");
    CHECK(d->from == a.local_endpoint());
    CHECK_FALSE(b.receive());
}

TEST_CASE("binding a taken port throws") {
    auto a = net::UdpSocket::bind(net::Endpoint::loopback(0));
    CHECK_THROWS_AS(net::UdpSocket::bind(a.local_endpoint()), net::BindError);
}

TEST_CASE("event loop timers fire in deadline order and cancel works") {
    net::EventLoop loop;
    std::vector<int> order;
    std::atomic<bool> done{false};
    {
        net::LoopThread thread(loop);
        thread.call([&] {
            loop.schedule_after(30ms, [&] { order.push_back(3); done = true; });
            loop.schedule_after(10ms, [&] { order.push_back(1); });
            auto id = loop.schedule_after(20ms, [&] { order.push_back(99); });
            loop.schedule_after(15ms, [&] { order.push_back(2); });
            loop.cancel(id);
            return 0;
        });
        for (int i = 0; i < 200 && !done; ++i) std::this_thread::sleep_for(5ms);
    }
    CHECK(order == std::vector<int>{1, 2, 3});
}

TEST_CASE("event loop delivers readable sockets") {
    net::EventLoop loop;
    auto rx = net::UdpSocket::bind(net::Endpoint::loopback(0));
    auto tx = net::UdpSocket::bind(net::Endpoint::loopback(0));
    std::atomic<int> got{0};
    net::LoopThread thread(loop);
    thread.call([&] {
        loop.watch(rx.fd(), [&] {
            while (rx.receive()) ++got;
        });
        return 0;
    });
    for (int i = 0; i < 5; ++i) tx.send_to(rx.local_endpoint(), std::string_view("x"));
    for (int i = 0; i < 200 && got < 5; ++i) std::this_thread::sleep_for(2ms);
    CHECK(got == 5);
    thread.call([&] {
        loop.unwatch(rx.fd());
        return 0;
    });
}

TEST_CASE("timer precision is well under a millisecond of lateness") {
    net::EventLoop loop;
    net::LoopThread thread(loop);
    std::promise<net::TimePoint> fired;
    auto t0 = net::EventLoop::now();
    thread.call([&] {
        loop.schedule_at(t0 + 5ms, [&] { fired.set_value(net::EventLoop::now()); });
        return 0;
    });
    auto late = fired.get_future().get() - (t0 + 5ms);
    CHECK(late >= 0ns);
    CHECK(late < 2ms);
}

TEST_CASE("default profiles carry the calibrated aggregates") {
    auto ims = server::ServerProfile::ims_default();
    CHECK(server::to_ms(ims.delay_for(server::SignalKind::Invite) + ims.delay_for(server::SignalKind::Ringing)) ==
          doctest::Approx(3.92).epsilon(1e-9));
    CHECK(server::to_ms(ims.total_call_processing()) == doctest::Approx(9.00).epsilon(1e-9));

    auto gw = server::ServerProfile::gateway_default();
    CHECK(server::to_ms(gw.delay_for(server::SignalKind::Invite)) == doctest::Approx(254.5));
    CHECK(server::to_ms(gw.total_call_processing()) == doctest::Approx(257.48).epsilon(1e-9));

    auto en = server::ServerProfile::enum_default();
    CHECK(server::to_ms(en.delay_for(server::SignalKind::Query)) == doctest::Approx(0.3454).epsilon(1e-9));
    CHECK(en.capacity == 8156);

    CHECK_NOTHROW(ims.validate());
    CHECK_NOTHROW(gw.validate());
    CHECK_NOTHROW(en.validate());
}

TEST_CASE("capacity must match the curve's saturation rate") {
    CHECK(server::saturation_capacity(server::ServerProfile::ims_default().cpu_curve) == 30.0);
    CHECK(server::saturation_capacity(server::ServerProfile::gateway_default().cpu_curve) == 55.0);
    CHECK_FALSE(server::saturation_capacity(server::ServerProfile::enum_default().cpu_curve));

    auto p = server::ServerProfile::ims_default();
    p.capacity = 40;
    CHECK_THROWS_AS(p.validate(), server::ProfileError);
    p = server::ServerProfile::ims_default();
    p.cpu_curve[2].rate = 5;
    CHECK_THROWS_AS(p.validate(), server::ProfileError);
    p = server::ServerProfile::ims_default();
    p.per_signal_delay[server::SignalKind::Ack] = -1ms;
    CHECK_THROWS_AS(p.validate(), server::ProfileError);
}

TEST_CASE("signal kind names round trip") {
    for (auto k : {server::SignalKind::Invite, server::SignalKind::Trying, server::SignalKind::Ringing,
                   server::SignalKind::Ok, server::SignalKind::Ack, server::SignalKind::Bye, server::SignalKind::Query}) {
        CHECK(server::parse_signal_kind(server::to_string(k)) == k);
    }
    CHECK_FALSE(server::parse_signal_kind("nope"));
}

TEST_CASE("work queue: below capacity nothing is shed") {
    // 30 call/s x 6 signals at exactly the service rate never accumulates backlog.
    server::WorkQueue q(server::ServerProfile::ims_default().service_cost(), 1s);
    net::TimePoint t{};
    const auto gap = std::chrono::duration_cast<net::Duration>(std::chrono::duration<double>(1.0 / 180.0));
    for (int i = 0; i < 180 * 30; ++i) {
        CHECK(q.admit(t));
        t += gap;
    }
    CHECK(q.stats().shed == 0);
    CHECK(q.stats().max_backlog < 10ms);
}

TEST_CASE("work queue: long-run shed fraction matches (offered - capacity) / offered") {
    // Oracle: a saturated single server admits exactly capacity per unit time.
    const double capacity = 100, offered = 140;
    server::WorkQueue q(std::chrono::duration_cast<net::Duration>(std::chrono::duration<double>(1.0 / capacity)), 1s);
    net::TimePoint t{};
    const auto gap = std::chrono::duration_cast<net::Duration>(std::chrono::duration<double>(1.0 / offered));
    const int n = static_cast<int>(offered * 60);
    for (int i = 0; i < n; ++i) {
        q.admit(t);
        t += gap;
    }
    double shed_rate = static_cast<double>(q.stats().shed) / n;
    CHECK(shed_rate == doctest::Approx((offered - capacity) / offered).epsilon(0.05));
    CHECK(q.stats().max_backlog <= 1s);
}

TEST_CASE("work queue: zero cost never sheds") {
    server::WorkQueue q(0ns, 1s);
    net::TimePoint t{};
    for (int i = 0; i < 1000; ++i) CHECK(q.admit(t) == t);
    CHECK(q.backlog(t) == 0ns);
}

TEST_CASE("rate meter counts the last second") {
    server::RateMeter m;
    net::TimePoint t{};
    for (int i = 0; i < 50; ++i) {
        m.record(t);
        t += 20ms;
    }
    CHECK(m.rate(t) == doctest::Approx(50).epsilon(0.1));
    CHECK(m.rate(t + 5s) == 0);
}

TEST_CASE("work queue: grace absorbs one burst without waiting") {
    const auto cost = 10ms;
    server::WorkQueue q(cost, 1s, 30ms);
    net::TimePoint t{};
    // Up to 30 ms of existing backlog is absorbed: four start at once, the fifth waits.
    for (int i = 0; i < 4; ++i) CHECK(q.admit(t) == t);
    CHECK(q.admit(t) == t + 10ms);
    // Backlog drains at the service rate.
    CHECK(q.backlog(t + 50ms) == 0ns);
    CHECK(q.admit(t + 50ms) == t + 50ms);
}

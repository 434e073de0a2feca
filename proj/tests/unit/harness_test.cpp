#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "voipbed/enumdns/enum_server.h"
#include "voipbed/harness/load.h"
#include "voipbed/harness/queryperf.h"
#include "voipbed/harness/runner.h"

using namespace voipbed;
using namespace voipbed::harness;
using namespace std::chrono_literals;

TEST_CASE("uniform arrivals: exact spacing") {
    auto a = generate_arrivals({10, 1, Arrival::Uniform, 30}, 1);
    REQUIRE(a.size() == 10);
    for (int i = 0; i < 10; ++i) CHECK(a[i] == doctest::Approx(i * 0.1));
    CHECK(generate_arrivals({0, 5, Arrival::Uniform, 30}, 1).empty());
    CHECK(generate_arrivals({0, 5, Arrival::Poisson, 30}, 1).empty());
}

TEST_CASE("poisson arrivals: count concentration over seeds") {
    // Count over 100 s at 30/s is Poisson(3000); 3 sigma = 3 * sqrt(3000).
    const double bound = 3 * std::sqrt(3000.0);
    double total_gap = 0;
    std::size_t total_n = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto a = generate_arrivals({30, 100, Arrival::Poisson, 30}, seed);
        CAPTURE(seed);
        CHECK(std::abs(static_cast<double>(a.size()) - 3000.0) <= bound);
        CHECK(std::is_sorted(a.begin(), a.end()));
        CHECK(a.back() < 100.0);
        total_gap += a.back();
        total_n += a.size();
    }
    // Mean gap ~ 1/rate.
    CHECK(total_gap / static_cast<double>(total_n) == doctest::Approx(1.0 / 30).epsilon(0.02));
}

TEST_CASE("arrivals are deterministic under a fixed seed") {
    LoadSpec l{25, 20, Arrival::Poisson, 30};
    CHECK(generate_arrivals(l, 99) == generate_arrivals(l, 99));
    CHECK(generate_arrivals(l, 99) != generate_arrivals(l, 100));
}

TEST_CASE("load spec validation") {
    CHECK_THROWS_AS(LoadSpec({-1, 1, Arrival::Uniform, 30}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(LoadSpec({1, 0, Arrival::Uniform, 30}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(LoadSpec({1, 1, Arrival::Uniform, 0}).validate(), std::invalid_argument);
    CHECK(parse_arrival("poisson") == Arrival::Poisson);
    CHECK_FALSE(parse_arrival("burst"));
}

TEST_CASE("scenario definitions") {
    CHECK_FALSE(Scenario::get(ScenarioId::S1).enum_enabled);
    CHECK(Scenario::get(ScenarioId::S2).enum_enabled);
    CHECK(Scenario::get(ScenarioId::S3).enum_enabled);
    CHECK(Scenario::get(ScenarioId::S3).probe_user == "2003");
    CHECK_FALSE(Scenario::get(ScenarioId::GwDirect).via_ims);
    for (auto id : {ScenarioId::S1, ScenarioId::S2, ScenarioId::S3, ScenarioId::GwDirect}) {
        CHECK(parse_scenario(to_string(id)) == id);
    }
}

TEST_CASE("register_pool: 1 and 100 users, dead server") {
    ims::ImsOptions o;
    o.bind = net::Endpoint::loopback(0);
    ims::RegistrarProxy proxy(o);
    auto one = register_pool(1, proxy.endpoint());
    CHECK(proxy.locations().size() == 1);
    CHECK(proxy.locations().lookup("uas1@ims.test")->contact == one->endpoint());

    auto many = register_pool(100, proxy.endpoint());
    std::set<std::string> aors;
    for (const auto& b : proxy.locations().snapshot()) aors.insert(b.aor);
    CHECK(aors.size() == 100);  // uas1 re-registered to the new pool
    CHECK(proxy.locations().lookup("uas77@ims.test")->contact == many->endpoint());

    auto silent = net::UdpSocket::bind(net::Endpoint::loopback(0));
    UasPool pool;
    CHECK_THROWS_AS(pool.register_user("x", "ims.test", silent.local_endpoint(), 50ms, 2), RegistrationFailed);
}

TEST_CASE("S1 idle run: every probe rings, no failures, PDD on budget") {
    HarnessOptions h;
    auto r = run_scenario(Scenario::get(ScenarioId::S1), {0, 1.0, Arrival::Uniform, 5}, h);
    REQUIRE(r.records.size() == 5);
    for (const auto& rec : r.records) {
        CHECK(rec.outcome == Outcome::RingingOk);
        REQUIRE(rec.t_180_received);
        double pdd = std::chrono::duration<double, std::milli>(*rec.t_180_received - *rec.t_invite_sent).count();
        CHECK(pdd >= 107.87);
        CHECK(pdd <= 107.87 + 15);
        CHECK(rec.t_200_received);
    }
    CHECK(r.counters == Counters{});
    CHECK(r.background_started == 0);
    CHECK_FALSE(r.aborted);
}

TEST_CASE("S1 with background load completes every call") {
    HarnessOptions h;
    h.warmup = 200ms;
    h.hold = 100ms;
    auto r = run_scenario(Scenario::get(ScenarioId::S1), {10, 2.0, Arrival::Uniform, 4}, h);
    CHECK(r.records.size() == 4);
    // 10/s over warm-up + window, 4 of them taken by probes.
    CHECK(r.background_started == 22 - 4);
    CHECK(r.background_completed == r.background_started);
    CHECK(r.counters.timeout == 0);
    CHECK(r.queues.at("ims").shed == 0);
}

TEST_CASE("S2 idle resolves through ENUM") {
    HarnessOptions h;
    auto r = run_scenario(Scenario::get(ScenarioId::S2), {0, 1.0, Arrival::Uniform, 3}, h);
    REQUIRE(r.records.size() == 3);
    for (const auto& rec : r.records) CHECK(rec.outcome == Outcome::RingingOk);
    CHECK(r.queues.at("enum").admitted >= 3);
}

TEST_CASE("queryperf: ceiling with zero wrong answers and max-rate cap") {
    enumdns::EnumServer srv(default_zone(), net::Endpoint::loopback(0));
    QueryperfOptions q;
    q.server = srv.endpoint();
    q.start_rate = 50;
    q.step = 50;
    q.max_rate = 100;
    auto r = queryperf(q, *default_zone());
    CHECK(r.server_answered);
    CHECK(r.ceiling == 100);
    CHECK(r.wrong_answers == 0);
    REQUIRE(r.at_ceiling());
    CHECK(r.at_ceiling()->correct == r.at_ceiling()->sent);
}

TEST_CASE("queryperf: starting above the ceiling backs off") {
    auto profile = server::ServerProfile::enum_default();
    profile.capacity = 400;
    profile.max_backlog = 200ms;
    enumdns::EnumServer srv(default_zone(), net::Endpoint::loopback(0), profile);
    QueryperfOptions q;
    q.server = srv.endpoint();
    q.start_rate = 1600;
    q.max_rate = 1600;
    q.refine_steps = 2;
    auto r = queryperf(q, *default_zone());
    CHECK(r.ceiling > 0);
    CHECK(r.ceiling < 1600);
    CHECK(r.ceiling <= 400 * 1.05);
    CHECK(r.wrong_answers == 0);
}

TEST_CASE("queryperf: dead server never answers") {
    auto silent = net::UdpSocket::bind(net::Endpoint::loopback(0));
    QueryperfOptions q;
    q.server = silent.local_endpoint();
    q.start_rate = 20;
    q.window = 100ms;
    auto r = queryperf(q, *default_zone());
    CHECK_FALSE(r.server_answered);
    CHECK(r.ceiling == 0);
}

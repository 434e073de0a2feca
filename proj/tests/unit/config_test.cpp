#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "voipbed/config/testbed.h"
#include "voipbed/net/udp_socket.h"

using namespace voipbed;
using namespace voipbed::config;
namespace fs = std::filesystem;

#ifndef VOIPBED_CONF_DIR
#error "VOIPBED_CONF_DIR must point at the shipped conf/ directory"
#endif

namespace {

const fs::path kShipped = fs::path(VOIPBED_CONF_DIR) / "testbed.ini";

// Scratch directory holding a config plus the shipped zone and dialplan.
struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("voipbed_cfg_" + name)) {
        fs::remove_all(dir);
        fs::create_directories(dir);
        fs::copy_file(fs::path(VOIPBED_CONF_DIR) / "enum.zone", dir / "enum.zone");
        fs::copy_file(fs::path(VOIPBED_CONF_DIR) / "extensions.dialplan", dir / "extensions.dialplan");
    }
    ~Scratch() { fs::remove_all(dir); }
    fs::path write(const std::string& file, const std::string& text) const {
        std::ofstream(dir / file) << text;
        return dir / file;
    }
};

const std::string kMinimal =
    "[enum]\n"
    "zone = enum.zone\n"
    "[gateway]\n"
    "dialplan = extensions.dialplan\n";

}  // namespace

TEST_CASE("shipped config loads and matches the built-in topology") {
    auto cfg = load_config(kShipped);
    CHECK(cfg.topology.ims_bind.to_string() == "127.0.0.1:5060");
    CHECK(cfg.topology.enum_bind.to_string() == "127.0.0.1:5353");
    CHECK(cfg.topology.gateway_bind.to_string() == "127.0.0.1:5070");
    REQUIRE(cfg.topology.zone);
    CHECK(*cfg.topology.zone == *harness::default_zone());
    CHECK(cfg.enum_apex() == "e164.test");
    auto builtin = harness::default_topology();
    CHECK(cfg.topology.dialplan.size() == builtin.dialplan.size());
    for (std::size_t i = 0; i < builtin.dialplan.size(); ++i) {
        CHECK(cfg.topology.dialplan[i].pattern == builtin.dialplan[i].pattern);
        CHECK(cfg.topology.dialplan[i].endpoint == builtin.dialplan[i].endpoint);
    }
    REQUIRE(cfg.topology.endpoints.size() == 2);
    CHECK(cfg.topology.endpoints[1].lines == 256);
    CHECK(cfg.matrix.size() == 8 + 7 + 2);
    CHECK(cfg.matrix[8] == MatrixCell{harness::ScenarioId::S2, 0});
    CHECK(cfg.harness.endpoint_delay == std::chrono::microseconds(103950));
    CHECK(cfg.topology.ims_profile.capacity == 30);
    CHECK(validate_config(kShipped).empty());
}

TEST_CASE("validation never opens listeners") {
    // Hold the configured ports; a validator that binds would then fail.
    auto a = net::UdpSocket::bind(net::Endpoint::loopback(15060));
    Scratch s("nolisten");
    auto p = s.write("t.ini", kMinimal + "[ims]\nbind = 127.0.0.1:15060\n");
    CHECK(validate_config(p).empty());
}

TEST_CASE("dialplan naming an unknown FXS is reported at its line") {
    Scratch s("unknown_fxs");
    s.write("extensions.dialplan", "# plan\n2003 => fxs:fxs1\n4000 => fxs:nobody\n");
    auto d = validate_config(s.write("t.ini", kMinimal));
    REQUIRE(d.size() == 1);
    CHECK(d[0].file == s.dir / "extensions.dialplan");
    CHECK(d[0].line == 3);
    CHECK(d[0].message.find("nobody") != std::string::npos);
    CHECK(d[0].to_string().find("extensions.dialplan:3:") != std::string::npos);
}

TEST_CASE("duplicate port is reported at the second bind") {
    Scratch s("dup_port");
    auto d = validate_config(s.write("t.ini", "[ims]\nbind = 127.0.0.1:7000\n" + kMinimal + "bind = 127.0.0.1:7000\n"));
    REQUIRE(d.size() == 1);
    CHECK(d[0].line == 7);
    CHECK(d[0].message.find("7000") != std::string::npos);
    CHECK(d[0].message.find("[ims]") != std::string::npos);
    // Port 0 is ephemeral and never clashes.
    CHECK(validate_config(s.write("u.ini", "[ims]\nbind = 127.0.0.1:0\n[enum]\nzone = enum.zone\nbind = 127.0.0.1:0\n"
                                           "[gateway]\ndialplan = extensions.dialplan\n"))
              .empty());
}

TEST_CASE("value errors are line anchored and all reported together") {
    Scratch s("values");
    auto d = validate_config(s.write("t.ini",
                                     "[ims]\n"
                                     "capacity = lots\n"
                                     "bind = nowhere\n"
                                     "colour = blue\n"
                                     "[harness]\n"
                                     "matrix = s9:1\n"
                                     "arrival = bursty\n"
                                     "[enum]\n"
                                     "zone = missing.zone\n"
                                     "[extra]\n"
                                     "k = v\n"));
    std::vector<int> lines;
    for (const auto& x : d) lines.push_back(x.line);
    std::sort(lines.begin(), lines.end());
    CHECK(lines == std::vector<int>{2, 3, 4, 6, 7, 9, 10});
}

TEST_CASE("syntax and referenced-file errors") {
    Scratch s("syntax");
    auto bad_ini = validate_config(s.write("t.ini", "[ims]\ncapacity = 30\nno equals sign here\n"));
    REQUIRE(bad_ini.size() == 1);
    CHECK(bad_ini[0].line == 3);

    auto dup_key = validate_config(s.write("u.ini", "[ims]\ncapacity = 30\ncapacity = 30\n"));
    REQUIRE(dup_key.size() == 1);
    CHECK(dup_key[0].line == 3);

    s.write("enum.zone", "+1001 NAPTR 100 10 \"u\" \"E2U+sip\" \"!^.*$!sip:a@b!\" .\nnonsense\n");
    auto zone = validate_config(s.write("v.ini", kMinimal));
    REQUIRE(zone.size() == 1);
    CHECK(zone[0].file == s.dir / "enum.zone");
    CHECK(zone[0].line == 2);

    CHECK(validate_config(s.dir / "absent.ini").size() == 1);
}

TEST_CASE("profile invariants surface as diagnostics") {
    Scratch s("profile");
    // The calibration curve saturates at 30 call/s; a different capacity disagrees.
    auto d = validate_config(s.write("t.ini", kMinimal + "[ims]\ncapacity = 40\n"));
    REQUIRE(d.size() == 1);
    CHECK(d[0].line == 5);
    CHECK(d[0].message.find("capacity") != std::string::npos);

    auto cfg = load_config(s.write("u.ini", kMinimal + "[ims]\ndelay_invite_ms = 2.5\ncpu_curve = 10:50, 20:100\n"
                                                       "capacity = 10\n"));
    CHECK(cfg.topology.ims_profile.delay_for(server::SignalKind::Invite) == std::chrono::microseconds(2500));
    CHECK(cfg.topology.ims_profile.cpu_curve.size() == 2);
    CHECK(cfg.topology.ims_profile.capacity == 10);
}

TEST_CASE("matrix and rate parsing") {
    auto m = parse_matrix("s2:0,5 ; gw:60");
    CHECK(m == std::vector<MatrixCell>{{harness::ScenarioId::S2, 0}, {harness::ScenarioId::S2, 5},
                                       {harness::ScenarioId::GwDirect, 60}});
    CHECK(parse_rates("0, 2.5,30") == std::vector<double>{0, 2.5, 30});
    CHECK_THROWS_AS(parse_rates(""), std::invalid_argument);
    CHECK_THROWS_AS(parse_rates("-1"), std::invalid_argument);
    CHECK_THROWS_AS(parse_matrix("s1"), std::invalid_argument);
    CHECK_THROWS_AS(parse_matrix("s7:1"), std::invalid_argument);
}

#include "voipbed/config/testbed.h"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "voipbed/enumdns/error.h"
#include "voipbed/gateway/dialplan.h"

namespace voipbed::config {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

std::string Diagnostic::to_string() const {
    std::string out = file.string();
    if (line > 0) out += ":" + std::to_string(line);
    return out + ": " + message;
}

namespace {

std::string join(const std::vector<Diagnostic>& ds) {
    std::string out;
    for (const auto& d : ds) out += (out.empty() ? "" : "\n") + d.to_string();
    return out;
}

std::string trim(std::string_view s) { return boost::algorithm::trim_copy(std::string(s)); }

std::optional<double> to_double(std::string_view s) {
    auto t = trim(s);
    double v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || t.empty()) return std::nullopt;
    return v;
}

template <typename Int>
std::optional<Int> to_int(std::string_view s) {
    auto t = trim(s);
    Int v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || t.empty()) return std::nullopt;
    return v;
}

std::optional<bool> to_bool(std::string_view s) {
    auto t = boost::algorithm::to_lower_copy(trim(s));
    if (t == "true" || t == "on" || t == "yes" || t == "1") return true;
    if (t == "false" || t == "off" || t == "no" || t == "0") return false;
    return std::nullopt;
}

std::vector<std::string> split(std::string_view s, const char* seps) {
    std::vector<std::string> parts;
    std::string text(s);
    boost::algorithm::split(parts, text, boost::algorithm::is_any_of(seps));
    std::vector<std::string> out;
    for (auto& p : parts) {
        auto t = trim(p);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

// property_tree keeps no positions, so keys are located with a line scan.
std::map<std::string, int> key_lines(std::istream& in) {
    std::map<std::string, int> out;
    std::string line, section;
    for (int n = 1; std::getline(in, line); ++n) {
        auto t = trim(line);
        if (t.empty() || t[0] == ';' || t[0] == '#') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = trim(t.substr(1, t.size() - 2));
            out.emplace(section, n);
        } else if (auto eq = t.find('='); eq != std::string::npos) {
            out.emplace(section + "\n" + trim(t.substr(0, eq)), n);
        }
    }
    return out;
}

class Section {
  public:
    Section(std::string name, const pt::ptree* tree, const std::map<std::string, int>& lines, const fs::path& file,
            std::vector<Diagnostic>& diags)
        : name_(std::move(name)), tree_(tree), lines_(lines), file_(file), diags_(diags) {}

    int line() const {
        auto it = lines_.find(name_);
        return it == lines_.end() ? 0 : it->second;
    }
    int line(const std::string& key) const {
        auto it = lines_.find(name_ + "\n" + key);
        return it == lines_.end() ? line() : it->second;
    }
    void error(const std::string& key, const std::string& msg) {
        diags_.push_back({file_, key.empty() ? line() : line(key), "[" + name_ + "] " + msg});
    }

    std::optional<std::string> take(const std::string& key) {
        used_.insert(key);
        if (!tree_) return std::nullopt;
        auto it = tree_->find(key);
        if (it == tree_->not_found()) return std::nullopt;
        return trim(it->second.data());
    }
    void take_double(const std::string& key, double& out, double min = 0) {
        if (auto v = take(key)) {
            auto d = to_double(*v);
            if (!d || *d < min) return error(key, key + " must be a number >= " + fmt(min) + ", got '" + *v + "'");
            out = *d;
        }
    }
    template <typename Int>
    void take_int(const std::string& key, Int& out, Int min) {
        if (auto v = take(key)) {
            auto d = to_int<Int>(*v);
            if (!d || *d < min)
                return error(key, key + " must be an integer >= " + std::to_string(min) + ", got '" + *v + "'");
            out = *d;
        }
    }
    void take_ms(const std::string& key, net::Duration& out) {
        double ms = -1;
        take_double(key, ms);
        if (ms >= 0) out = server::from_ms(ms);
    }
    void take_endpoint(const std::string& key, net::Endpoint& out) {
        if (auto v = take(key)) {
            auto ep = net::Endpoint::parse(*v);
            if (!ep) return error(key, key + " must be ipv4:port, got '" + *v + "'");
            out = *ep;
        }
    }
    std::optional<fs::path> take_path(const std::string& key) {
        auto v = take(key);
        if (!v) return std::nullopt;
        fs::path p(*v);
        if (p.is_relative()) p = file_.parent_path() / p;
        return p;
    }

    void reject_unknown() {
        if (!tree_) return;
        for (const auto& [key, child] : *tree_) {
            if (!used_.count(key)) error(key, "unknown key '" + key + "'");
        }
    }

  private:
    static std::string fmt(double d) {
        std::ostringstream os;
        os << d;
        return os.str();
    }

    std::string name_;
    const pt::ptree* tree_;
    const std::map<std::string, int>& lines_;
    const fs::path& file_;
    std::vector<Diagnostic>& diags_;
    std::set<std::string> used_;
};

void read_profile(Section& s, server::ServerProfile& p) {
    s.take_double("capacity", p.capacity);
    s.take_int("signals_per_call", p.signals_per_call, 1);
    s.take_ms("max_backlog_ms", p.max_backlog);
    if (auto v = s.take("hard_fail_at")) {
        auto d = to_double(*v);
        if (!d || *d <= 0) s.error("hard_fail_at", "hard_fail_at must be a positive rate");
        else p.hard_fail_at = *d;
    }
    if (auto v = s.take("cpu_curve")) {
        std::vector<server::CpuPoint> curve;
        for (const auto& item : split(*v, ",")) {
            auto parts = split(item, ":");
            std::optional<double> r, pct;
            if (parts.size() == 2) r = to_double(parts[0]), pct = to_double(parts[1]);
            if (!r || !pct) {
                s.error("cpu_curve", "cpu_curve entries are rate:percent, got '" + item + "'");
                return;
            }
            curve.push_back({*r, *pct});
        }
        p.cpu_curve = curve;
    }
    for (auto kind : {server::SignalKind::Invite, server::SignalKind::Trying, server::SignalKind::Ringing,
                      server::SignalKind::Ok, server::SignalKind::Ack, server::SignalKind::Bye,
                      server::SignalKind::Cancel, server::SignalKind::Register, server::SignalKind::Query,
                      server::SignalKind::Other}) {
        auto key = "delay_" + std::string(server::to_string(kind)) + "_ms";
        auto d = net::Duration(-1);
        s.take_ms(key, d);
        if (d >= net::Duration::zero()) p.per_signal_delay[kind] = d;
    }
    try {
        p.validate();
    } catch (const server::ProfileError& e) {
        s.error("", std::string("profile: ") + e.what());
    }
}

std::vector<gateway::FxsEndpoint> read_endpoints(Section& s) {
    std::vector<gateway::FxsEndpoint> out;
    auto v = s.take("endpoints");
    if (!v) return out;
    for (const auto& item : split(*v, ",")) {
        auto parts = split(item, ":");
        gateway::FxsEndpoint e;
        std::optional<int> lines = 1;
        if (parts.size() == 3) lines = to_int<int>(parts[2]);
        if ((parts.size() != 2 && parts.size() != 3) || !lines) {
            s.error("endpoints", "endpoints entries are id:number[:lines], got '" + item + "'");
            continue;
        }
        e.id = parts[0];
        e.number = parts[1];
        e.lines = *lines;
        out.push_back(e);
    }
    return out;
}

void check_file(Section& s, const std::string& key, const std::optional<fs::path>& p, bool& ok) {
    ok = p && fs::is_regular_file(*p);
    if (p && !ok) s.error(key, key + " file not found: " + p->string());
}

}  // namespace

ConfigError::ConfigError(std::vector<Diagnostic> diagnostics)
    : std::runtime_error(join(diagnostics)), diagnostics_(std::move(diagnostics)) {}

std::string TestbedConfig::enum_apex() const {
    return topology.zone ? topology.zone->apex() : harness::default_zone()->apex();
}

std::vector<double> parse_rates(std::string_view text) {
    std::vector<double> out;
    for (const auto& r : split(text, ",")) {
        auto d = to_double(r);
        if (!d || *d < 0) throw std::invalid_argument("bad rate '" + r + "'");
        out.push_back(*d);
    }
    if (out.empty()) throw std::invalid_argument("no rates given");
    return out;
}

std::vector<MatrixCell> parse_matrix(std::string_view text) {
    std::vector<MatrixCell> out;
    for (const auto& group : split(text, ";")) {
        auto colon = group.find(':');
        if (colon == std::string::npos) throw std::invalid_argument("matrix entries are scenario:rates, got '" + group + "'");
        auto id = harness::parse_scenario(trim(group.substr(0, colon)));
        if (!id) throw std::invalid_argument("unknown scenario '" + trim(group.substr(0, colon)) + "'");
        for (double r : parse_rates(group.substr(colon + 1))) out.push_back({*id, r});
    }
    return out;
}

TestbedConfig load_config(const fs::path& path) {
    std::vector<Diagnostic> diags;
    TestbedConfig cfg;
    cfg.source = path;
    cfg.topology = harness::default_topology();
    cfg.topology.ims_bind = net::Endpoint::loopback(5060);
    cfg.topology.gateway_bind = net::Endpoint::loopback(5070);
    cfg.topology.enum_bind = net::Endpoint::loopback(5353);
    cfg.output_dir = "out";

    std::ifstream in(path);
    if (!in) throw ConfigError({{path, 0, "cannot open config file"}});
    std::stringstream text;
    text << in.rdbuf();
    pt::ptree tree;
    try {
        std::istringstream copy(text.str());
        pt::read_ini(copy, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError({{path, static_cast<int>(e.line()), e.message()}});
    }
    std::istringstream scan(text.str());
    const auto lines = key_lines(scan);

    const std::set<std::string> known = {"ims", "enum", "gateway", "sip", "harness", "output"};
    for (const auto& [name, child] : tree) {
        if (!known.count(name)) {
            auto it = lines.find(name);
            diags.push_back({path, it == lines.end() ? 0 : it->second, "unknown section [" + name + "]"});
        }
    }
    auto section = [&](const std::string& name) {
        auto it = tree.find(name);
        return Section(name, it == tree.not_found() ? nullptr : &it->second, lines, path, diags);
    };

    auto& topo = cfg.topology;

    auto sip = section("sip");
    sip.take_ms("t1_ms", topo.timers.t1);
    sip.take_ms("t2_ms", topo.timers.t2);
    sip.take_ms("linger_ms", topo.timers.linger);
    sip.take_int("max_attempts", topo.timers.max_attempts, 0);
    if (topo.timers.t1 <= net::Duration::zero() || topo.timers.t2 < topo.timers.t1) {
        sip.error("t1_ms", "timers need 0 < t1 <= t2");
    }
    sip.reject_unknown();
    cfg.harness.timers = topo.timers;

    auto ims = section("ims");
    ims.take_endpoint("bind", topo.ims_bind);
    if (auto v = ims.take("domain")) topo.ims_domain = *v;
    if (auto v = ims.take("enum")) {
        if (auto b = to_bool(*v)) cfg.ims_enum = *b;
        else ims.error("enum", "enum must be on or off");
    }
    read_profile(ims, topo.ims_profile);
    ims.reject_unknown();

    auto en = section("enum");
    en.take_endpoint("bind", topo.enum_bind);
    auto apex = en.take("apex");
    auto zone_path = en.take_path("zone");
    read_profile(en, topo.enum_profile);
    en.reject_unknown();
    bool zone_ok = false;
    check_file(en, "zone", zone_path, zone_ok);
    if (zone_ok) {
        cfg.zone_path = *zone_path;
        try {
            topo.zone = std::make_shared<const enumdns::EnumZone>(
                enumdns::load_zone_file(*zone_path, apex ? *apex : std::string(enumdns::kDefaultApex)));
        } catch (const enumdns::EnumError& e) {
            diags.push_back({*zone_path, e.line(), e.what()});
        }
    } else if (!zone_path && apex && enumdns::EnumZone(*apex).apex() != harness::default_zone()->apex()) {
        en.error("apex", "apex " + *apex + " needs a zone file");
    }

    auto gw = section("gateway");
    gw.take_endpoint("bind", topo.gateway_bind);
    if (auto v = gw.take("domain")) topo.gateway_domain = *v;
    net::Duration ring = net::Duration(-1), answer = net::Duration(-1);
    gw.take_ms("ring_delay_ms", ring);
    gw.take_ms("answer_delay_ms", answer);
    if (auto eps = read_endpoints(gw); !eps.empty()) topo.endpoints = eps;
    std::set<std::string> ids;
    for (auto& e : topo.endpoints) {
        if (ring >= net::Duration::zero()) e.ring_delay = ring;
        if (answer >= net::Duration::zero()) e.answer_delay = answer;
        try {
            e.validate();
        } catch (const std::invalid_argument& ex) {
            gw.error("endpoints", ex.what());
        }
        if (!ids.insert(e.id).second) gw.error("endpoints", "duplicate FXS endpoint " + e.id);
    }
    auto dialplan_path = gw.take_path("dialplan");
    read_profile(gw, topo.gateway_profile);
    gw.reject_unknown();
    bool dialplan_ok = false;
    check_file(gw, "dialplan", dialplan_path, dialplan_ok);
    if (dialplan_ok) {
        cfg.dialplan_path = *dialplan_path;
        try {
            topo.dialplan = gateway::load_dialplan(*dialplan_path, ids);
        } catch (const gateway::DialplanError& e) {
            diags.push_back({*dialplan_path, e.line(), e.what()});
        }
    } else if (!dialplan_path) {
        for (const auto& d : topo.dialplan) {
            if (d.action == gateway::DialplanEntry::Action::ToFxs && !ids.count(d.endpoint)) {
                gw.error("endpoints", "built-in dialplan needs FXS endpoint " + d.endpoint + "; give a dialplan file");
                break;
            }
        }
    }

    // Ports must be distinct; 0 asks for an ephemeral one and never clashes.
    std::map<int, std::string> ports;
    for (auto [name, sec, ep] : {std::tuple{"ims", &ims, topo.ims_bind}, std::tuple{"enum", &en, topo.enum_bind},
                                 std::tuple{"gateway", &gw, topo.gateway_bind}}) {
        if (ep.port == 0) continue;
        auto [it, fresh] = ports.emplace(ep.port, name);
        if (!fresh) sec->error("bind", "port " + std::to_string(ep.port) + " already used by [" + it->second + "]");
    }

    auto h = section("harness");
    h.take_int("seed", cfg.harness.seed, std::uint64_t{0});
    h.take_double("duration_s", cfg.load.duration_s);
    h.take_int("measured_calls", cfg.load.measured_calls, 1);
    if (auto v = h.take("arrival")) {
        if (auto a = harness::parse_arrival(*v)) cfg.load.arrival = *a;
        else h.error("arrival", "arrival must be uniform or poisson");
    }
    h.take_ms("warmup_ms", cfg.harness.warmup);
    h.take_ms("hold_ms", cfg.harness.hold);
    h.take_ms("drain_ms", cfg.harness.drain);
    h.take_ms("endpoint_delay_ms", cfg.harness.endpoint_delay);
    h.take_int("abort_after_timeouts", cfg.harness.abort_after_timeouts, 1);
    h.take_int("uas_count", topo.uas_count, 2);
    if (auto v = h.take("matrix")) {
        try {
            cfg.matrix = parse_matrix(*v);
        } catch (const std::invalid_argument& e) {
            h.error("matrix", e.what());
        }
    }
    try {
        auto probe = cfg.load;
        probe.rate = 0;
        probe.validate();
    } catch (const std::invalid_argument& e) {
        h.error("", e.what());
    }
    h.reject_unknown();

    auto out = section("output");
    if (auto p = out.take_path("dir")) cfg.output_dir = *p;
    out.reject_unknown();

    if (!diags.empty()) throw ConfigError(std::move(diags));
    return cfg;
}

std::vector<Diagnostic> validate_config(const fs::path& path) {
    try {
        load_config(path);
        return {};
    } catch (const ConfigError& e) {
        return e.diagnostics();
    }
}

}  // namespace voipbed::config

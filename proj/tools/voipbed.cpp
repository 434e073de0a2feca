// voipbed: validate a testbed config, run scenario matrices, ramp queryperf,
// or serve one component.
#include <CLI11.hpp>
#include <csignal>
#include <iomanip>
#include <iostream>
#include <memory>

#include "voipbed/config/testbed.h"
#include "voipbed/enumdns/enum_server.h"
#include "voipbed/enumdns/error.h"
#include "voipbed/gateway/b2bua.h"
#include "voipbed/harness/queryperf.h"
#include "voipbed/harness/runner.h"
#include "voipbed/ims/registrar_proxy.h"
#include "voipbed/metrics/metrics.h"
#include "voipbed/net/udp_socket.h"

namespace {

using namespace voipbed;
namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kInvalid = 2;

std::optional<config::TestbedConfig> load(const fs::path& path) {
    try {
        return config::load_config(path);
    } catch (const config::ConfigError& e) {
        for (const auto& d : e.diagnostics()) std::cerr << d.to_string() << "\n";
        return std::nullopt;
    }
}

int cmd_validate(const fs::path& path) {
    auto diags = config::validate_config(path);
    for (const auto& d : diags) std::cerr << d.to_string() << "\n";
    if (!diags.empty()) return kInvalid;
    std::cout << path.string() << ": ok\n";
    return kOk;
}

struct RunArgs {
    std::string scenario;
    std::string rates;
    std::string out;
    double duration_s = 0;
    int calls = 0;
    std::optional<std::uint64_t> seed;
};

int cmd_run(const fs::path& path, const RunArgs& args) {
    auto cfg = load(path);
    if (!cfg) return kInvalid;

    std::vector<config::MatrixCell> cells;
    try {
        if (args.scenario.empty()) {
            cells = cfg->matrix;
            if (!args.rates.empty()) {
                std::cerr << "--rates needs --scenario\n";
                return kInvalid;
            }
        } else {
            auto id = harness::parse_scenario(args.scenario);
            if (!id) {
                std::cerr << "unknown scenario '" << args.scenario << "' (s1, s2, s3, gw)\n";
                return kInvalid;
            }
            if (!args.rates.empty()) {
                for (double r : config::parse_rates(args.rates)) cells.push_back({*id, r});
            } else {
                for (const auto& c : cfg->matrix)
                    if (c.scenario == *id) cells.push_back(c);
                if (cells.empty()) cells.push_back({*id, 0});
            }
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << "\n";
        return kInvalid;
    }
    if (cells.empty()) {
        std::cerr << "nothing to run: no matrix in the config and no --scenario\n";
        return kInvalid;
    }

    auto load_spec = cfg->load;
    if (args.duration_s > 0) load_spec.duration_s = args.duration_s;
    if (args.calls > 0) load_spec.measured_calls = args.calls;
    auto options = cfg->harness;
    if (args.seed) options.seed = *args.seed;
    fs::path out = args.out.empty() ? cfg->output_dir : fs::path(args.out);

    metrics::ReportInput report;
    report.profiles = {{server::ServerRole::Ims, cfg->topology.ims_profile},
                       {server::ServerRole::Gateway, cfg->topology.gateway_profile},
                       {server::ServerRole::Enum, cfg->topology.enum_profile}};
    for (const auto& cell : cells) {
        load_spec.rate = cell.rate;
        std::cerr << "running " << harness::to_string(cell.scenario) << " at " << cell.rate << " call/s ...\n";
        try {
            report.runs.push_back(
                harness::run_scenario(harness::Scenario::get(cell.scenario), load_spec, options, cfg->topology));
        } catch (const harness::TopologyUnreachable& e) {
            std::cerr << "topology failure: " << e.what() << "\n";
            return kRuntime;
        }
        const auto& r = report.runs.back();
        std::cerr << "  probes " << r.records.size() << ", retrans " << r.counters.retrans << ", timeouts "
                  << r.counters.timeout << ", shed " << std::fixed << std::setprecision(2) << 100 * r.shed_rate()
                  << "%" << (r.aborted ? ", aborted" : "") << "\n";
    }
    try {
        metrics::emit_report(report, out);
    } catch (const std::exception& e) {
        std::cerr << "cannot write report: " << e.what() << "\n";
        return kRuntime;
    }
    std::cout << metrics::format_summary(report);
    std::cout << "report written to " << out.string() << "\n";
    return kOk;
}

struct QueryperfArgs {
    double max_rate = 20000;
    double step = 1000;
    double start = 1000;
    std::string server;
    std::string out;
};

int cmd_queryperf(const fs::path& path, const QueryperfArgs& args) {
    auto cfg = load(path);
    if (!cfg) return kInvalid;
    if (!(args.max_rate > 0 && args.max_rate <= 60000) || !(args.step > 0) || !(args.start > 0)) {
        std::cerr << "rates must be positive and --max-rate at most 60000\n";
        return kInvalid;
    }
    auto zone = cfg->topology.zone ? cfg->topology.zone : harness::default_zone();

    harness::QueryperfOptions o;
    o.max_rate = args.max_rate;
    o.step = args.step;
    o.start_rate = std::min(args.start, args.max_rate);

    // Without --server, an in-process server is booted from the config.
    std::unique_ptr<enumdns::EnumServer> local;
    if (!args.server.empty()) {
        auto ep = net::Endpoint::parse(args.server);
        if (!ep) {
            std::cerr << "--server must be ipv4:port\n";
            return kInvalid;
        }
        o.server = *ep;
    } else {
        try {
            local = std::make_unique<enumdns::EnumServer>(zone, cfg->topology.enum_bind, cfg->topology.enum_profile);
        } catch (const enumdns::EnumError& e) {
            std::cerr << "cannot start ENUM server: " << e.what() << "\n";
            return kRuntime;
        }
        o.server = local->endpoint();
    }

    auto result = harness::queryperf(o, *zone);
    if (!result.server_answered) {
        std::cerr << "ENUM server at " << o.server.to_string() << " never answered\n";
        return kRuntime;
    }
    std::cout << std::fixed << std::setprecision(1);
    std::cout << "rate q/s   sent   correct  wrong  errors  lost  p50 ms  p95 ms  p99 ms  pass\n";
    for (const auto& s : result.steps) {
        std::cout << std::setw(8) << s.rate << std::setw(7) << s.sent << std::setw(10) << s.correct << std::setw(7)
                  << s.wrong << std::setw(8) << s.errors << std::setw(6) << s.lost << std::setprecision(3)
                  << std::setw(8) << s.p50_ms << std::setw(8) << s.p95_ms << std::setw(8) << s.p99_ms
                  << std::setprecision(1) << (s.passed ? "  yes" : "  no") << "\n";
    }
    std::cout << "ceiling " << std::setprecision(2) << result.ceiling << " q/s (capped at " << o.max_rate << ")\n";
    if (const auto* at = result.at_ceiling()) {
        std::cout << "latency at ceiling: p50 " << std::setprecision(3) << at->p50_ms << " ms, p95 " << at->p95_ms
                  << " ms, p99 " << at->p99_ms << " ms\n";
    }
    std::cout << "wrong answers " << result.wrong_answers << "\n";
    std::cout << "reference ceiling " << std::setprecision(2) << harness::kReferenceQueryperfCeiling
              << " q/s (original hardware, not comparable)\n";

    fs::path out = args.out.empty() ? cfg->output_dir : fs::path(args.out);
    try {
        fs::create_directories(out);
        metrics::write_queryperf_csv(result, out / "queryperf.csv");
    } catch (const std::exception& e) {
        std::cerr << "cannot write queryperf.csv: " << e.what() << "\n";
        return kRuntime;
    }
    return kOk;
}

int cmd_serve(const fs::path& path, const std::string& component, double seconds) {
    auto cfg = load(path);
    if (!cfg) return kInvalid;

    // Block before any loop thread exists so only sigtimedwait sees them.
    sigset_t stop;
    sigemptyset(&stop);
    sigaddset(&stop, SIGINT);
    sigaddset(&stop, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &stop, nullptr);

    const auto& t = cfg->topology;
    std::shared_ptr<void> running;
    net::Endpoint at;
    try {
        if (component == "enum") {
            auto s = std::make_shared<enumdns::EnumServer>(t.zone ? t.zone : harness::default_zone(), t.enum_bind,
                                                           t.enum_profile);
            at = s->endpoint();
            running = s;
        } else if (component == "gateway") {
            gateway::GatewayOptions o;
            o.bind = t.gateway_bind;
            o.domain = t.gateway_domain;
            o.profile = t.gateway_profile;
            o.endpoints = t.endpoints;
            o.dialplan = t.dialplan;
            o.timers = t.timers;
            auto s = std::make_shared<gateway::GatewayB2bua>(o);
            at = s->endpoint();
            running = s;
        } else {
            ims::ImsOptions o;
            o.bind = t.ims_bind;
            o.domain = t.ims_domain;
            o.profile = t.ims_profile;
            o.enum_enabled = cfg->ims_enum;
            o.resolver = enumdns::ResolverOptions{t.enum_bind, cfg->enum_apex()};
            o.hosts[t.gateway_domain] = t.gateway_bind;
            o.timers = t.timers;
            auto s = std::make_shared<ims::RegistrarProxy>(o);
            at = s->endpoint();
            running = s;
        }
    } catch (const net::BindError& e) {
        std::cerr << "cannot bind: " << e.what() << "\n";
        return kRuntime;
    } catch (const enumdns::EnumError& e) {
        std::cerr << "cannot bind: " << e.what() << "\n";
        return kRuntime;
    }
    std::cout << component << " listening on " << at.to_string() << std::endl;

    int sig = 0;
    if (seconds > 0) {
        timespec ts{static_cast<time_t>(seconds), static_cast<long>((seconds - static_cast<time_t>(seconds)) * 1e9)};
        sig = sigtimedwait(&stop, nullptr, &ts);
    } else {
        sigwait(&stop, &sig);
    }
    running.reset();
    std::cout << component << " stopped" << std::endl;
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"In-process VoIP signalling testbed: IMS proxy, ENUM server, PSTN gateway and a SIP load harness"};
    app.require_subcommand(1);
    std::string config_path = "conf/testbed.ini";

    auto* validate = app.add_subcommand("validate", "Statically check a config, its zone and its dialplan");
    validate->add_option("config", config_path, "Testbed config file")->capture_default_str();

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "Boot the topology in-process and run a scenario matrix");
    run->add_option("config", config_path, "Testbed config file")->capture_default_str();
    run->add_option("--scenario", run_args.scenario, "s1, s2, s3 or gw (default: the config's matrix)");
    run->add_option("--rates", run_args.rates, "Comma-separated call rates, e.g. 0,5,10");
    run->add_option("--out", run_args.out, "Report directory (default: [output] dir)");
    run->add_option("--duration", run_args.duration_s, "Seconds of load per cell after warm-up");
    run->add_option("--calls", run_args.calls, "Measured calls per cell");
    run->add_option("--seed", run_args.seed, "Arrival seed");

    QueryperfArgs qp;
    auto* queryperf = app.add_subcommand("queryperf", "Ramp NAPTR query rate until the ENUM server falls behind");
    queryperf->add_option("config", config_path, "Testbed config file")->capture_default_str();
    queryperf->add_option("--max-rate", qp.max_rate, "Highest rate tried; caps the reported ceiling")
        ->capture_default_str();
    queryperf->add_option("--step", qp.step, "Ramp increment, q/s")->capture_default_str();
    queryperf->add_option("--start", qp.start, "First rate, q/s")->capture_default_str();
    queryperf->add_option("--server", qp.server, "Query an external server (ipv4:port) instead of booting one");
    queryperf->add_option("--out", qp.out, "Directory for queryperf.csv (default: [output] dir)");

    std::string component;
    double serve_seconds = 0;
    auto* serve = app.add_subcommand("serve", "Run one component until SIGINT/SIGTERM");
    serve->add_option("config", config_path, "Testbed config file")->capture_default_str();
    serve->add_option("--component", component, "ims, gateway or enum")
        ->required()
        ->check(CLI::IsMember({"ims", "gateway", "enum"}));
    serve->add_option("--for", serve_seconds, "Stop after this many seconds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }

    try {
        if (*validate) return cmd_validate(config_path);
        if (*run) return cmd_run(config_path, run_args);
        if (*queryperf) return cmd_queryperf(config_path, qp);
        if (*serve) return cmd_serve(config_path, component, serve_seconds);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
    return kInvalid;
}

#include "voipbed/harness/runner.h"

#include <algorithm>
#include <thread>

#include "voipbed/enumdns/dns_wire.h"
#include "voipbed/enumdns/error.h"

namespace voipbed::harness {

using namespace std::chrono_literals;

bool ping_sip(const net::Endpoint& server, net::Duration timeout) {
    auto sock = net::UdpSocket::bind(net::Endpoint::loopback(0));
    sock.send_to(server, std::string_view("\r\n\r\n"));
    if (!sock.wait_readable(timeout)) return false;
    auto d = sock.receive();
    return d && d->from == server;
}

bool ping_enum(const net::Endpoint& server, const std::string& apex, net::Duration timeout) {
    auto sock = net::UdpSocket::bind(net::Endpoint::loopback(0));
    auto q = enumdns::encode_query(apex, 0x5151);
    sock.send_to(server, std::span<const std::uint8_t>(q));
    if (!sock.wait_readable(timeout)) return false;
    auto d = sock.receive();
    if (!d) return false;
    auto raw = std::span(reinterpret_cast<const std::uint8_t*>(d->payload.data()), d->payload.size());
    try {
        enumdns::decode_response(raw, 0x5151);
        return true;
    } catch (const enumdns::EnumError&) {
        return false;
    }
}

Topology::Topology(const TopologyConfig& config, bool enum_enabled) {
    try {
        auto zone = config.zone ? config.zone : default_zone();
        enum_ = std::make_unique<enumdns::EnumServer>(zone, config.enum_bind, config.enum_profile);

        gateway::GatewayOptions g;
        g.bind = config.gateway_bind;
        g.domain = config.gateway_domain;
        g.profile = config.gateway_profile;
        g.endpoints = config.endpoints;
        g.dialplan = config.dialplan;
        g.timers = config.timers;
        gateway_ = std::make_unique<gateway::GatewayB2bua>(std::move(g));

        ims::ImsOptions o;
        o.bind = config.ims_bind;
        o.domain = config.ims_domain;
        o.profile = config.ims_profile;
        o.enum_enabled = enum_enabled;
        o.resolver = enumdns::ResolverOptions{enum_->endpoint(), zone->apex(), 2s, 2};
        o.hosts[config.gateway_domain] = gateway_->endpoint();
        o.timers = config.timers;
        ims_ = std::make_unique<ims::RegistrarProxy>(std::move(o));

        if (!ping_enum(enum_->endpoint(), zone->apex())) throw TopologyUnreachable("ENUM server did not answer");
        if (!ping_sip(ims_->endpoint())) throw TopologyUnreachable("IMS did not answer");
        if (!ping_sip(gateway_->endpoint())) throw TopologyUnreachable("gateway did not answer");

        uas_ = register_pool(config.uas_count, ims_->endpoint(), config.ims_domain, config.timers);
    } catch (const net::BindError& e) {
        throw TopologyUnreachable(e.what());
    } catch (const enumdns::EnumError& e) {
        throw TopologyUnreachable(e.what());
    } catch (const RegistrationFailed& e) {
        throw TopologyUnreachable(e.what());
    }
}

Topology::~Topology() = default;

std::map<std::string, server::QueueStats> Topology::queue_stats() const {
    return {{"ims", ims_->queue_stats()}, {"gateway", gateway_->queue_stats()}, {"enum", enum_->queue_stats()}};
}

std::uint64_t Topology::shed_total() const {
    std::uint64_t total = 0;
    for (const auto& [name, q] : queue_stats()) total += q.shed;
    return total;
}

RunResult run_scenario(const Scenario& scenario, const LoadSpec& load, const HarnessOptions& options,
                       const TopologyConfig& topology) {
    load.validate();
    Topology topo(topology, scenario.enum_enabled);

    UacConfig uc;
    uc.first_hop = scenario.via_ims ? topo.ims_endpoint() : topo.gateway_endpoint();
    uc.domain = topology.ims_domain;
    uc.endpoint_delay = options.endpoint_delay;
    uc.hold = options.hold;
    uc.abort_after_timeouts = options.abort_after_timeouts;
    uc.timers = options.timers;
    UacPool uac(uc);

    const auto probe_uri = "sip:" + scenario.probe_user + "@" + scenario.target_domain;
    const auto background_uri = "sip:" + scenario.background_user + "@" + scenario.target_domain;

    // Warm-up only matters when there is load to warm up.
    const double warmup_s = load.rate > 0 ? std::chrono::duration<double>(options.warmup).count() : 0.0;
    LoadSpec whole = load;
    whole.duration_s = warmup_s + load.duration_s;
    auto arrivals = generate_arrivals(whole, options.seed);

    // Probe i is due at warmup + (i + 0.5) * duration / n and takes over the
    // first background arrival at or after that time.
    std::vector<bool> is_probe(arrivals.size(), false);
    std::vector<double> extra_probes;
    std::size_t cursor = 0;
    for (int i = 0; i < load.measured_calls; ++i) {
        double due = warmup_s + (i + 0.5) * load.duration_s / load.measured_calls;
        while (cursor < arrivals.size() && arrivals[cursor] < due) ++cursor;
        if (cursor < arrivals.size()) {
            is_probe[cursor++] = true;
        } else {
            extra_probes.push_back(due);
        }
    }

    const auto t0 = net::EventLoop::now() + 50ms;
    auto at = [&](double s) { return t0 + std::chrono::duration_cast<net::Duration>(std::chrono::duration<double>(s)); };
    for (std::size_t i = 0; i < arrivals.size(); ++i) {
        uac.schedule_call(at(arrivals[i]), is_probe[i] ? probe_uri : background_uri, is_probe[i]);
    }
    for (double s : extra_probes) uac.schedule_call(at(s), probe_uri, true);

    std::this_thread::sleep_until(at(whole.duration_s));
    const auto deadline = net::EventLoop::now() + options.drain;
    while (net::EventLoop::now() < deadline) {
        if (uac.scheduled() == 0 && uac.active() == 0) break;
        if (uac.aborted() && uac.active() == 0) break;
        std::this_thread::sleep_for(20ms);
    }

    auto r = uac.finish();
    RunResult out;
    out.scenario = scenario.id;
    out.rate = load.rate;
    out.records = std::move(r.records);
    out.counters = r.counters;
    out.counters.shed_observed = topo.shed_total();
    out.queues = topo.queue_stats();
    out.background_started = r.background_started;
    out.background_completed = r.background_completed;
    out.signals_offered_ims = topo.ims().stats().received;
    out.aborted = r.aborted;
    return out;
}

}  // namespace voipbed::harness

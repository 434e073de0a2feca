#pragma once

#include <memory>
#include <stdexcept>

#include "voipbed/enumdns/enum_server.h"
#include "voipbed/gateway/b2bua.h"
#include "voipbed/harness/agents.h"
#include "voipbed/harness/scenario.h"
#include "voipbed/ims/registrar_proxy.h"

namespace voipbed::harness {

class TopologyUnreachable : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// ENUM server, IMS proxy, gateway and the UAS pool, all in-process on
// loopback. The IMS is wired to the ENUM server and knows the gateway's
// domain.
class Topology {
  public:
    // Throws TopologyUnreachable when a component fails to bind, register or
    // answer its health ping.
    Topology(const TopologyConfig& config, bool enum_enabled);
    ~Topology();

    net::Endpoint ims_endpoint() const { return ims_->endpoint(); }
    net::Endpoint gateway_endpoint() const { return gateway_->endpoint(); }
    net::Endpoint enum_endpoint() const { return enum_->endpoint(); }
    ims::RegistrarProxy& ims() { return *ims_; }
    gateway::GatewayB2bua& gateway() { return *gateway_; }
    enumdns::EnumServer& enum_server() { return *enum_; }
    UasPool& uas() { return *uas_; }

    std::map<std::string, server::QueueStats> queue_stats() const;
    std::uint64_t shed_total() const;

  private:
    std::unique_ptr<enumdns::EnumServer> enum_;
    std::unique_ptr<gateway::GatewayB2bua> gateway_;
    std::unique_ptr<ims::RegistrarProxy> ims_;
    std::unique_ptr<UasPool> uas_;
};

// CRLF keepalive for SIP servers, an apex NAPTR query for ENUM.
bool ping_sip(const net::Endpoint& server, net::Duration timeout = std::chrono::seconds(1));
bool ping_enum(const net::Endpoint& server, const std::string& apex, net::Duration timeout = std::chrono::seconds(1));

// Boots a fresh topology, offers `load.rate` calls/s for warm-up + duration
// (probes replace evenly spaced background arrivals after warm-up), waits
// for calls to drain and collects the result. Throws TopologyUnreachable.
RunResult run_scenario(const Scenario& scenario, const LoadSpec& load, const HarnessOptions& options,
                       const TopologyConfig& topology = default_topology());

}  // namespace voipbed::harness

#pragma once

#include <chrono>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "voipbed/enumdns/e164.h"
#include "voipbed/enumdns/error.h"
#include "voipbed/enumdns/naptr.h"
#include "voipbed/net/endpoint.h"
#include "voipbed/net/event_loop.h"
#include "voipbed/net/udp_socket.h"

namespace voipbed::enumdns {

struct ResolverOptions {
    net::Endpoint server;
    std::string apex = std::string(kDefaultApex);
    net::Duration timeout = std::chrono::seconds(2);
    int retries = 2;  // attempts = retries + 1
};

// Thread-safe sink for per-query round-trip times.
class LatencyCollector {
  public:
    void add(net::Duration sample);
    std::vector<net::Duration> samples() const;
    std::size_t size() const;

  private:
    mutable std::mutex mu_;
    std::vector<net::Duration> samples_;
};

// Blocking resolver. Each call uses its own socket, so one instance can be
// shared between threads.
class EnumResolver {
  public:
    explicit EnumResolver(ResolverOptions options, LatencyCollector* latencies = nullptr);

    // e164_to_domain -> NAPTR query -> select_naptr -> apply_naptr_regexp.
    // Throws EnumError(Timeout | Nxdomain | NoViableRecord | ServFail | ...).
    std::string resolve(const E164Number& number) const;
    std::vector<NaptrRecord> lookup(std::string_view domain) const;

    const ResolverOptions& options() const { return options_; }

  private:
    ResolverOptions options_;
    LatencyCollector* latencies_;
};

using ResolveResult = std::variant<std::string, EnumError>;

// Non-blocking resolver driven by an EventLoop. Construct, use and destroy on
// the loop thread (or before the loop runs).
class AsyncEnumClient {
  public:
    using Callback = std::function<void(ResolveResult)>;

    AsyncEnumClient(net::EventLoop& loop, ResolverOptions options, LatencyCollector* latencies = nullptr);
    ~AsyncEnumClient();
    AsyncEnumClient(const AsyncEnumClient&) = delete;
    AsyncEnumClient& operator=(const AsyncEnumClient&) = delete;

    void resolve(const E164Number& number, Callback done);
    std::size_t pending() const { return pending_.size(); }

  private:
    struct Pending {
        E164Number number;
        std::vector<std::uint8_t> wire;
        int attempt = 0;
        net::TimePoint sent_at;
        net::EventLoop::TimerId timer = 0;
        Callback done;
    };

    void transmit(std::uint16_t id);
    void on_timer(std::uint16_t id);
    void on_readable();
    std::uint16_t fresh_id();

    net::EventLoop& loop_;
    ResolverOptions options_;
    LatencyCollector* latencies_;
    net::UdpSocket sock_;
    std::mt19937 rng_;
    std::unordered_map<std::uint16_t, Pending> pending_;
};

}  // namespace voipbed::enumdns

#include "voipbed/harness/queryperf.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "voipbed/enumdns/dns_wire.h"
#include "voipbed/enumdns/error.h"
#include "voipbed/net/udp_socket.h"

namespace voipbed::harness {

using namespace std::chrono_literals;

namespace {

bool same_records(std::vector<enumdns::NaptrRecord> a, std::vector<enumdns::NaptrRecord> b) {
    auto key = [](const enumdns::NaptrRecord& r) {
        return std::tie(r.order, r.preference, r.flags, r.service, r.regexp, r.replacement);
    };
    auto less = [&](const auto& x, const auto& y) { return key(x) < key(y); };
    std::sort(a.begin(), a.end(), less);
    std::sort(b.begin(), b.end(), less);
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [&](const auto& x, const auto& y) {
               return key(x) == key(y);
           });
}

double percentile(std::vector<double>& v, double p) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(v.size())));
    return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

}  // namespace

const QueryperfStep* QueryperfResult::at_ceiling() const {
    const QueryperfStep* best = nullptr;
    for (const auto& s : steps) {
        if (s.passed && s.rate == ceiling) best = &s;
    }
    return best;
}

QueryperfStep run_query_step(const QueryperfOptions& options, const enumdns::EnumZone& zone, double rate) {
    if (zone.size() == 0) throw std::invalid_argument("queryperf needs a populated zone");
    if (rate <= 0 || rate > 60000) throw std::invalid_argument("queryperf rate must be in (0, 60000]");

    struct Target {
        std::vector<std::uint8_t> wire;
        const std::vector<enumdns::NaptrRecord>* records;
    };
    std::vector<Target> targets;
    for (const auto& [digits, records] : zone.entries()) {
        auto domain = enumdns::e164_to_domain(enumdns::E164Number::parse(digits), zone.apex());
        targets.push_back({enumdns::encode_query(domain, 0), &records});
    }

    auto sock = net::UdpSocket::bind(net::Endpoint::loopback(0));
    QueryperfStep step;
    step.rate = rate;
    struct Outstanding {
        net::TimePoint sent_at;
        std::size_t target = 0;
        bool answered = false;
    };
    std::vector<Outstanding> sent;
    std::vector<double> latencies;

    auto handle = [&](const net::Datagram& d, net::TimePoint now) {
        auto raw = std::span(reinterpret_cast<const std::uint8_t*>(d.payload.data()), d.payload.size());
        auto id = enumdns::message_id(raw);
        if (!id || *id >= sent.size() || sent[*id].answered) return;
        auto& q = sent[*id];
        q.answered = true;
        try {
            auto resp = enumdns::decode_response(raw, *id);
            if (same_records(resp.answers, *targets[q.target].records)) {
                ++step.correct;
                latencies.push_back(std::chrono::duration<double, std::milli>(now - q.sent_at).count());
            } else {
                ++step.wrong;
            }
        } catch (const enumdns::EnumError&) {
            ++step.errors;
        }
    };

    const auto start = net::EventLoop::now();
    const auto window_end = start + options.window;
    const auto listen_end = window_end + options.grace;
    const auto total = static_cast<std::size_t>(std::llround(rate * std::chrono::duration<double>(options.window).count()));
    for (;;) {
        auto now = net::EventLoop::now();
        if (now >= listen_end) break;
        auto due = now < window_end
                       ? std::min(total, static_cast<std::size_t>(rate * std::chrono::duration<double>(now - start).count()) + 1)
                       : total;
        while (sent.size() < due) {
            auto& t = targets[sent.size() % targets.size()];
            auto id = static_cast<std::uint16_t>(sent.size());
            t.wire[0] = static_cast<std::uint8_t>(id >> 8);
            t.wire[1] = static_cast<std::uint8_t>(id & 0xff);
            sent.push_back({net::EventLoop::now(), sent.size() % targets.size(), false});
            sock.send_to(options.server, std::span<const std::uint8_t>(t.wire));
        }
        while (auto d = sock.receive()) handle(*d, net::EventLoop::now());
        auto next = sent.size() < total
                        ? start + std::chrono::duration_cast<net::Duration>(
                                      std::chrono::duration<double>(static_cast<double>(sent.size()) / rate))
                        : listen_end;
        auto wait = std::min<net::Duration>(next - net::EventLoop::now(), 1ms);
        if (wait > net::Duration::zero()) sock.wait_readable(wait);
    }
    step.sent = sent.size();
    step.lost = step.sent - step.correct - step.wrong - step.errors;
    step.p50_ms = percentile(latencies, 50);
    step.p95_ms = percentile(latencies, 95);
    step.p99_ms = percentile(latencies, 99);
    const double n = static_cast<double>(std::max<std::uint64_t>(step.sent, 1));
    step.passed = static_cast<double>(step.correct) >= (1.0 - options.max_error_fraction) * n &&
                  static_cast<double>(step.wrong + step.errors) <= options.max_error_fraction * n;
    return step;
}

QueryperfResult queryperf(const QueryperfOptions& options, const enumdns::EnumZone& zone) {
    QueryperfResult result;
    auto run = [&](double rate) {
        auto s = run_query_step(options, zone, rate);
        result.wrong_answers += s.wrong;
        if (s.correct + s.wrong + s.errors > 0) result.server_answered = true;
        result.steps.push_back(s);
        // Let the server's backlog drain before the next window.
        std::this_thread::sleep_for(s.passed ? 50ms : 1200ms);
        return s.passed;
    };

    const double cap = options.max_rate;
    double rate = std::min(options.start_rate, cap);
    double last_pass = 0, first_fail = 0;
    if (!run(rate)) {
        first_fail = rate;
        // Back off until something passes.
        for (rate /= 2; rate >= 1; rate /= 2) {
            if (run(rate)) {
                last_pass = rate;
                break;
            }
            first_fail = rate;
            if (!result.server_answered) break;
        }
    } else {
        last_pass = rate;
        while (last_pass < cap) {
            rate = std::min(last_pass + options.step, cap);
            if (!run(rate)) {
                first_fail = rate;
                break;
            }
            last_pass = rate;
        }
    }
    if (last_pass > 0 && first_fail > last_pass) {
        for (int i = 0; i < options.refine_steps; ++i) {
            double mid = std::round((last_pass + first_fail) / 2);
            if (mid <= last_pass || mid >= first_fail) break;
            (run(mid) ? last_pass : first_fail) = mid;
        }
    }
    result.ceiling = last_pass;
    return result;
}

}  // namespace voipbed::harness

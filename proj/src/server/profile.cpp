#include "voipbed/server/profile.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

namespace voipbed::server {

namespace {

constexpr std::array<std::pair<SignalKind, std::string_view>, 10> kSignalNames{{
    {SignalKind::Invite, "invite"},
    {SignalKind::Trying, "100"},
    {SignalKind::Ringing, "180"},
    {SignalKind::Ok, "200"},
    {SignalKind::Ack, "ack"},
    {SignalKind::Bye, "bye"},
    {SignalKind::Cancel, "cancel"},
    {SignalKind::Register, "register"},
    {SignalKind::Query, "query"},
    {SignalKind::Other, "other"},
}};

}  // namespace

std::string_view to_string(ServerRole role) {
    switch (role) {
        case ServerRole::Ims: return "ims";
        case ServerRole::Gateway: return "gateway";
        case ServerRole::Enum: return "enum";
    }
    return "?";
}

std::optional<ServerRole> parse_server_role(std::string_view text) {
    if (text == "ims") return ServerRole::Ims;
    if (text == "gateway") return ServerRole::Gateway;
    if (text == "enum") return ServerRole::Enum;
    return std::nullopt;
}

std::string_view to_string(SignalKind kind) {
    for (const auto& [k, name] : kSignalNames) {
        if (k == kind) return name;
    }
    return "other";
}

std::optional<SignalKind> parse_signal_kind(std::string_view text) {
    for (const auto& [k, name] : kSignalNames) {
        if (name == text) return k;
    }
    return std::nullopt;
}

Duration ServerProfile::delay_for(SignalKind kind) const {
    auto it = per_signal_delay.find(kind);
    return it == per_signal_delay.end() ? Duration::zero() : it->second;
}

Duration ServerProfile::total_call_processing() const {
    Duration sum{0};
    for (const auto& [kind, d] : per_signal_delay) sum += d;
    return sum;
}

Duration ServerProfile::service_cost() const {
    if (capacity <= 0) return Duration::zero();
    double seconds = 1.0 / (capacity * std::max(1, signals_per_call));
    return std::chrono::round<Duration>(std::chrono::duration<double>(seconds));
}

std::optional<double> saturation_capacity(const std::vector<CpuPoint>& curve) {
    std::optional<double> last_ok;
    for (const auto& p : curve) {
        if (p.percent >= 100.0) return last_ok;
        last_ok = p.rate;
    }
    return std::nullopt;
}

void ServerProfile::validate() const {
    for (const auto& [kind, d] : per_signal_delay) {
        if (d < Duration::zero()) throw ProfileError("negative delay for signal " + std::string(to_string(kind)));
    }
    if (capacity < 0) throw ProfileError("capacity must be >= 0");
    if (signals_per_call < 1) throw ProfileError("signals_per_call must be >= 1");
    if (max_backlog <= Duration::zero()) throw ProfileError("queue depth must be > 0");
    for (std::size_t i = 0; i < cpu_curve.size(); ++i) {
        const auto& p = cpu_curve[i];
        if (p.rate < 0 || p.percent < 0 || p.percent > 100) {
            throw ProfileError("cpu_curve point out of range at index " + std::to_string(i));
        }
        if (i > 0 && !(p.rate > cpu_curve[i - 1].rate)) {
            throw ProfileError("cpu_curve rates must be strictly increasing");
        }
    }
    if (auto sat = saturation_capacity(cpu_curve); sat && std::abs(*sat - capacity) > 1e-9) {
        throw ProfileError("capacity " + std::to_string(capacity) + " disagrees with cpu_curve saturation rate " +
                           std::to_string(*sat));
    }
}

ServerProfile ServerProfile::ims_default() {
    ServerProfile p;
    p.role = ServerRole::Ims;
    // INVITE + 180 = 3.92 ms; the rest of the 9.00 ms per call is split evenly.
    p.per_signal_delay = {
        {SignalKind::Invite, from_ms(3.0)}, {SignalKind::Ringing, from_ms(0.92)}, {SignalKind::Trying, from_ms(1.27)},
        {SignalKind::Ok, from_ms(1.27)},    {SignalKind::Ack, from_ms(1.27)},     {SignalKind::Bye, from_ms(1.27)},
    };
    p.capacity = 30;
    p.signals_per_call = 6;  // INVITE, 180, 200, ACK, BYE, 200(BYE); a downstream 100 is free
    p.cpu_curve = {{5, 10}, {10, 15}, {15, 35}, {20, 50}, {25, 65}, {30, 78}, {35, 100}};
    return p;
}

ServerProfile ServerProfile::gateway_default() {
    ServerProfile p;
    p.role = ServerRole::Gateway;
    // 257.48 ms per call, 254.5 ms of it on INVITE.
    p.per_signal_delay = {
        {SignalKind::Invite, from_ms(254.5)}, {SignalKind::Ringing, from_ms(0.745)}, {SignalKind::Ok, from_ms(0.745)},
        {SignalKind::Ack, from_ms(0.745)},    {SignalKind::Bye, from_ms(0.745)},
    };
    p.capacity = 55;
    p.signals_per_call = 3;  // INVITE, ACK, BYE arrive from upstream
    p.cpu_curve = {{35, 51}, {40, 60}, {45, 69}, {50, 79}, {55, 92}, {60, 100}};
    return p;
}

ServerProfile ServerProfile::enum_default() {
    ServerProfile p;
    p.role = ServerRole::Enum;
    p.per_signal_delay = {{SignalKind::Query, from_ms(0.3454)}};
    p.capacity = 8156;
    p.signals_per_call = 1;
    p.cpu_curve = {{5, 0.3}, {10, 0.3}, {15, 0.3}, {20, 0.3}, {25, 0.7}, {30, 0.7}, {35, 0.7}};
    return p;
}

ServerProfile ServerProfile::zero_delay(ServerRole role) {
    ServerProfile p;
    p.role = role;
    p.capacity = 0;
    return p;
}

}  // namespace voipbed::server

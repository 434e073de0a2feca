#include "voipbed/harness/load.h"

#include <cmath>
#include <random>
#include <stdexcept>

namespace voipbed::harness {

std::string_view to_string(Arrival a) { return a == Arrival::Uniform ? "uniform" : "poisson"; }

std::optional<Arrival> parse_arrival(std::string_view text) {
    if (text == "uniform") return Arrival::Uniform;
    if (text == "poisson") return Arrival::Poisson;
    return std::nullopt;
}

void LoadSpec::validate() const {
    if (!(rate >= 0) || !std::isfinite(rate)) throw std::invalid_argument("rate must be >= 0");
    if (!(duration_s > 0) || !std::isfinite(duration_s)) throw std::invalid_argument("duration must be > 0");
    if (measured_calls < 1) throw std::invalid_argument("measured_calls must be >= 1");
}

std::vector<double> generate_arrivals(const LoadSpec& load, std::uint64_t seed) {
    load.validate();
    std::vector<double> out;
    if (load.rate == 0) return out;
    if (load.arrival == Arrival::Uniform) {
        // Index-based so spacing does not accumulate rounding.
        for (std::size_t i = 0;; ++i) {
            double t = static_cast<double>(i) / load.rate;
            if (t >= load.duration_s) break;
            out.push_back(t);
        }
        return out;
    }
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> gap(load.rate);
    for (double t = gap(rng); t < load.duration_s; t += gap(rng)) out.push_back(t);
    return out;
}

}  // namespace voipbed::harness

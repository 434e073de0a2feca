#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace voipbed::harness {

enum class Arrival { Uniform, Poisson };

std::string_view to_string(Arrival a);
std::optional<Arrival> parse_arrival(std::string_view text);

struct LoadSpec {
    double rate = 0;          // background calls per second
    double duration_s = 10;   // measurement window, after warm-up
    Arrival arrival = Arrival::Uniform;
    int measured_calls = 30;  // timed probe calls per run

    // Throws std::invalid_argument.
    void validate() const;
};

// Offsets in seconds from the start of the window, ascending, all < duration.
// Uniform: exact 1/rate spacing starting at 0. Poisson: exponential gaps with
// mean 1/rate from a mt19937_64 seeded with `seed`.
std::vector<double> generate_arrivals(const LoadSpec& load, std::uint64_t seed);

}  // namespace voipbed::harness

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace aivshop {

// Deterministic random source. All distribution sampling is implemented
// on top of raw 64-bit draws so that sequences are identical across
// standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform on the open interval (0, 1).
    double uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Inclusive integer range.
    long long uniform_int(long long lo, long long hi) {
        const double u = uniform01();
        auto v = lo + static_cast<long long>(u * static_cast<double>(hi - lo + 1));
        return v > hi ? hi : v;
    }

    // Strictly positive draws: uniform01() never returns 0 or 1.
    double exponential(double mean) { return -mean * std::log(uniform01()); }

    // Box-Muller, two raw draws per call, no cached spare.
    double normal(double mu, double sigma);

private:
    std::mt19937_64 eng_;
};

// Named independent substreams derived from one master seed. Consuming
// one stream never perturbs another.
class SeededStreams {
public:
    explicit SeededStreams(std::uint64_t master) : master_(master) {}

    Rng stream(std::string_view name, std::uint64_t salt = 0) const;

    std::uint64_t master() const { return master_; }

private:
    std::uint64_t master_;
};

std::uint64_t fnv1a64(std::string_view s);
std::uint64_t splitmix64(std::uint64_t x);

} // namespace aivshop

#include "aivshop/rng.hpp"

#include <cmath>

namespace aivshop {

double Rng::normal(double mu, double sigma) {
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mu + sigma * r * std::cos(2.0 * M_PI * u2);
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

Rng SeededStreams::stream(std::string_view name, std::uint64_t salt) const {
    std::uint64_t s = master_ ^ fnv1a64(name);
    s = splitmix64(s);
    s = splitmix64(s ^ (salt * 0x9E3779B97F4A7C15ULL));
    return Rng(s);
}

} // namespace aivshop

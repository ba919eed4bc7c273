#pragma once

// Counter-based random streams. Every task draws from its own stream keyed by
// (seed, stream id, task index), so sampled results never depend on how work
// is scheduled across threads.

#include <cstdint>
#include <string_view>

#include "psilab/linalg.hpp"

namespace psilab {

inline constexpr std::string_view kRngName = "splitmix64-counter/v1";

/// FNV-1a hash of a stream name.
constexpr std::uint64_t stream_id(std::string_view name) {
    std::uint64_t h = 14695981039346656037ull;
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index)
        : key_(splitmix64(seed ^ splitmix64(stream ^ splitmix64(index)))) {}

    std::uint64_t next_u64() { return splitmix64(key_ + 0x632be59bd9b4e019ull * ++counter_); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Standard normal via Box-Muller (portable, unlike std::normal_distribution).
    double normal();
    cplx complex_normal() { return {normal(), normal()}; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Uniform sample of the unit ball of C^m (real dimension 2m).
CVec uniform_in_unit_ball(CounterRng& rng, std::size_t m);
/// Uniform direction on the unit sphere of C^m.
CVec uniform_on_unit_sphere(CounterRng& rng, std::size_t m);
/// Uniform sample of the unit disk of C.
cplx uniform_in_unit_disk(CounterRng& rng);

}  // namespace psilab

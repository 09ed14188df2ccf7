#pragma once

#include <cmath>
#include <cstdint>

namespace tclgrid {

// Deterministic PRNG used everywhere randomness is needed. Draws are defined
// in this header (not via std:: distributions) so replays are bit-identical
// regardless of standard library version. Streams are derived from
// (seed, stream_id), so per-agent streams do not depend on iteration order.
class Rng {
  public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream_id = 0) {
        state_ = mix(seed ^ mix(stream_id + 0x9e3779b97f4a7c15ULL));
        if (state_ == 0) state_ = 0x6a09e667f3bcc909ULL;
        has_cached_normal_ = false;
        cached_normal_ = 0.0;
    }

    std::uint64_t next_u64() {
        // xorshift64* — small state, good equidistribution for simulation use
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545f4914f6cdd1dULL;
    }

    /// Uniform draw in [0, 1).
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (pairs cached).
    double normal() {
        if (has_cached_normal_) {
            has_cached_normal_ = false;
            return cached_normal_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        cached_normal_ = r * std::sin(a);
        has_cached_normal_ = true;
        return r * std::cos(a);
    }

    /// Integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        // splitmix64 finalizer
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
    double cached_normal_;
    bool has_cached_normal_;
};

} // namespace tclgrid

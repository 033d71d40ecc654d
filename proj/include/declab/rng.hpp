#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace declab {

/// xoshiro256++ with splitmix64 seeding.
///
/// Self-contained so that seeded experiments reproduce bit-for-bit across
/// platforms and worker counts; every independent work item derives its own
/// stream from (seed, tag).
class Rng {
  public:
    Rng(std::uint64_t seed, std::uint64_t stream_tag = 0) {
        std::uint64_t x = seed ^ (0x9E3779B97F4A7C15ULL * (stream_tag + 1));
        for (auto& s : state_) s = splitmix64(x);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    /// One standard complex Gaussian, E|z|^2 = 1 (Box-Muller, two uniforms).
    std::complex<double> complex_gaussian() {
        double u1 = uniform();
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-std::log(u1)); // radius for E|z|^2 = 1
        const double th = 2.0 * M_PI * u2;
        return {r * std::cos(th), r * std::sin(th)};
    }

    /// Uniform point on the unit circle, e(2*pi*i*u).
    std::complex<double> unit_phase() {
        const double th = 2.0 * M_PI * uniform();
        return {std::cos(th), std::sin(th)};
    }

  private:
    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    static std::uint64_t rotl(std::uint64_t v, int k) {
        return (v << k) | (v >> (64 - k));
    }

    std::uint64_t state_[4];
};

} // namespace declab

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace gridbp {

// Deterministic samplers built on mt19937_64 raw draws. The standard
// distribution adaptors are implementation-defined, which would break the
// byte-identical output contract across toolchains, so the inverse-CDF /
// Box-Muller steps are spelled out here.

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    // splitmix64 finalizer over the combined words
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform draw in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Exponential with the given rate (inverse CDF).
    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    /// Standard normal (Box-Muller; one value per pair of uniforms).
    double normal() {
        double u;
        do { u = uniform(); } while (u == 0.0);
        double v = uniform();
        return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * v);
    }

    double normal(double mean, double variance) {
        return mean + std::sqrt(variance) * normal();
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace gridbp

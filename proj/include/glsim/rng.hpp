#pragma once

#include <cmath>
#include <cstdint>

namespace glsim {

// splitmix64: tiny, fast, and identical output on every platform.
struct splitmix64 {
    std::uint64_t state;

    explicit splitmix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        state += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // uniform in (0, 1]; never returns 0 so log() below stays finite
    double next_unit() {
        return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
    }

    // uniform integer in [0, bound)
    std::uint64_t next_below(std::uint64_t bound) {
        return next() % bound;
    }
};

// Box-Muller transform over a splitmix64 stream; emits standard normals in pairs.
struct normal_sampler {
    splitmix64 rng;
    double spare = 0.0;
    bool have_spare = false;

    explicit normal_sampler(std::uint64_t seed) : rng(seed) {}

    double next() {
        if (have_spare) {
            have_spare = false;
            return spare;
        }
        double u1 = rng.next_unit();
        double u2 = rng.next_unit();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        spare = r * std::sin(theta);
        have_spare = true;
        return r * std::cos(theta);
    }
};

} // namespace glsim

#pragma once

// Deterministic randomness. mt19937_64 is bit-exact across platforms; the
// gaussian uses an explicit Box-Muller on raw uniforms so streams do not
// depend on the standard library's distribution internals.

#include <cmath>
#include <cstdint>
#include <random>

#include "ncz/matrix.hpp"

namespace ncz {

class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    // Per-sample stream: one seed plus a sample index, mixed splitmix-style.
    static Rng for_sample(uint64_t seed, uint64_t index) {
        uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return Rng(z ^ (z >> 31));
    }

    uint64_t raw() { return eng_(); }

    double uniform() {  // [0, 1)
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(eng_() % static_cast<uint64_t>(hi - lo + 1));
    }

    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    cplx cgauss() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-std::log(u1));
        const double t = 6.283185307179586476925287 * u2;
        return cplx(r * std::cos(t), r * std::sin(t));
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace ncz

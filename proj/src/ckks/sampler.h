#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "hesplit/ckks/modarith.h"

namespace hesplit::ckks {

inline constexpr double kNoiseStddev = 3.2;
inline constexpr double kNoiseBound = 6.0 * kNoiseStddev;

// Seeded source for keys and encryption randomness. Draws depend only on
// mt19937_64's specified output sequence.
class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : rng_(seed) {}

    u64 uniform_mod(u64 q) {
        const u64 limit = UINT64_MAX - UINT64_MAX % q;
        u64 r;
        do {
            r = rng_();
        } while (r >= limit);
        return r % q;
    }

    // Uniform over {-1, 0, 1}.
    std::vector<std::int64_t> ternary(std::size_t n) {
        std::vector<std::int64_t> v(n);
        for (auto& x : v) x = static_cast<std::int64_t>(uniform_mod(3)) - 1;
        return v;
    }

    // Rounded Gaussian, stddev 3.2, resampled beyond 6 sigma.
    std::vector<std::int64_t> gaussian(std::size_t n) {
        std::vector<std::int64_t> v(n);
        std::size_t i = 0;
        while (i < n) {
            const double u1 = 1.0 - unit();
            const double u2 = unit();
            const double r = std::sqrt(-2.0 * std::log(u1)) * kNoiseStddev;
            for (double z : {r * std::cos(2.0 * M_PI * u2), r * std::sin(2.0 * M_PI * u2)}) {
                if (i < n && std::abs(z) <= kNoiseBound) v[i++] = std::llround(z);
            }
        }
        return v;
    }

private:
    double unit() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

    std::mt19937_64 rng_;
};

}  // namespace hesplit::ckks

// SPDX-License-Identifier: Apache-2.0

#include "daqec/rng.h"

#include <cmath>
#include <limits>
#include <numbers>

namespace daqec {

uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

uint64_t derive_seed(uint64_t master, uint64_t stream, uint64_t counter) {
    return splitmix64(splitmix64(master ^ splitmix64(stream)) + counter);
}

Rng make_rng(uint64_t master, uint64_t stream, uint64_t counter) {
    return Rng(derive_seed(master, stream, counter));
}

double uniform01(Rng &rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

uint64_t uniform_below(Rng &rng, uint64_t n) {
    // Rejection sampling removes modulo bias.
    uint64_t limit = std::numeric_limits<uint64_t>::max() - std::numeric_limits<uint64_t>::max() % n;
    while (true) {
        uint64_t v = rng();
        if (v < limit) {
            return v % n;
        }
    }
}

double standard_normal(Rng &rng) {
    double u1 = uniform01(rng);
    double u2 = uniform01(rng);
    // 1 - u1 lies in (0, 1], so the log is finite.
    return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

uint64_t geometric_skip(Rng &rng, double p) {
    if (p <= 0) {
        return std::numeric_limits<uint64_t>::max();
    }
    if (p >= 1) {
        return 0;
    }
    double u = 1.0 - uniform01(rng);  // (0, 1]
    double k = std::floor(std::log(u) / std::log1p(-p));
    if (k >= 1.8e19) {
        return std::numeric_limits<uint64_t>::max();
    }
    return static_cast<uint64_t>(k);
}

}  // namespace daqec

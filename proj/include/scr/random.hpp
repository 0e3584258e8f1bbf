#pragma once

#include <cstdint>
#include <random>

namespace scr {

/// Uniform double in [0, 1) built directly from the generator output, so that
/// results are identical across standard libraries and platforms.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

}  // namespace scr

#pragma once

#include <cstdint>
#include <random>

#include "jetfield/rational.hpp"

namespace jf {

// All randomness in the engine flows through mt19937_64 with explicit
// seeds; values are derived from raw draws (std distributions are not
// bit-stable across standard libraries).

inline std::uint64_t draw(std::mt19937_64& g) { return g(); }

inline long long draw_int(std::mt19937_64& g, long long lo, long long hi) {
    return lo + (long long)(g() % (std::uint64_t)(hi - lo + 1));
}

// small nonzero-biased rational in [-3,3]
inline Rational draw_rational(std::mt19937_64& g) {
    long long n = draw_int(g, -9, 9);
    long long d = draw_int(g, 1, 4);
    return Rational(n, d);
}

inline Rational draw_nonzero_rational(std::mt19937_64& g) {
    for (;;) {
        Rational r = draw_rational(g);
        if (!r.is_zero()) return r;
    }
}

inline double draw_unit(std::mt19937_64& g) {
    return double(g() >> 11) / double(1ull << 53);
}

}  // namespace jf

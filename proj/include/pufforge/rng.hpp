#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "pufforge/bitvec.hpp"

namespace pufforge {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Stateless mix of two words; used for seed derivation.
inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a ^ (b + 0x9E3779B97F4A7C15ull + (a << 6) + (a >> 2));
    return splitmix64(s);
}

} // namespace detail

/// Deterministic, splittable random stream standing in for a TRNG.
/// Identical seeds give identical draw sequences; independent actors get
/// independent streams via split(), never by sharing one stream.
///
/// The Gaussian path is Box-Muller over raw uniform words rather than
/// std::normal_distribution, whose output sequence is implementation-defined.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    /// Number of raw 64-bit words drawn so far.
    std::uint64_t position() const { return position_; }

    std::uint64_t next_u64() {
        ++position_;
        return engine_();
    }

    /// Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound). bound must be positive.
    std::uint64_t next_below(std::uint64_t bound) {
        // rejection sampling keeps the draw unbiased
        std::uint64_t limit = ~0ull - ~0ull % bound;
        std::uint64_t v;
        do { v = next_u64(); } while (v >= limit);
        return v % bound;
    }

    /// Standard normal via Box-Muller; the spare value is cached.
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do { u1 = next_double(); } while (u1 <= 0.0);
        u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Uniform random bits as a BitVec.
    BitVec next_bits(std::size_t width) {
        BitVec v(width);
        std::uint64_t word = 0;
        int avail = 0;
        for (std::size_t i = 1; i <= width; ++i) {
            if (avail == 0) { word = next_u64(); avail = 64; }
            v.set_bit(i, static_cast<int>(word & 1u));
            word >>= 1;
            --avail;
        }
        return v;
    }

    /// Child stream derived from the parent seed and a caller-chosen tag.
    /// Splitting is a pure function of (seed, tag), independent of position.
    RandomStream split(std::uint64_t tag) const {
        return RandomStream(detail::mix64(seed_, tag));
    }

private:
    std::uint64_t seed_ = 0;
    std::uint64_t position_ = 0;
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace pufforge

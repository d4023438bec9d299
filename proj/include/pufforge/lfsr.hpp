#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "pufforge/bitvec.hpp"
#include "pufforge/errors.hpp"

namespace pufforge {

/// Feedback polynomial p(x) = x^width + c_{width-1} x^{width-1} + ... + c_0.
/// `taps` holds (c_{width-1}, ..., c_0) MSB-first; the x^width term is
/// implicit. The constant term c_0 must be set for the register update to be
/// invertible. Widths up to 64 are supported (the register rides a word).
struct LfsrConfig {
    int width = 0;
    BitVec taps;

    bool valid() const {
        return width >= 2 && width <= 64 &&
               static_cast<int>(taps.size()) == width &&
               !taps.all_zeros() && taps.bit(static_cast<std::size_t>(width)) == 1;
    }
};

struct LfsrState {
    LfsrConfig config;
    std::uint64_t reg = 0;

    BitVec register_bits() const {
        return BitVec::from_uint(reg, static_cast<std::size_t>(config.width));
    }
};

namespace detail {

/// Galois right-shift XOR mask: (p(x)+1)/x with the monic x^width term
/// folded into the top bit.
inline std::uint64_t galois_mask(const LfsrConfig& cfg) {
    std::uint64_t taps = cfg.taps.to_uint();
    return (taps >> 1) | (1ull << (cfg.width - 1));
}

inline std::uint64_t width_mask(int width) {
    return width == 64 ? ~0ull : (1ull << width) - 1;
}

/// Seed the register without the all-ones guard. Interior states reached by
/// shifting may legitimately be all-ones; only external seeds are filtered.
inline LfsrState seed_unchecked(const LfsrConfig& cfg, std::uint64_t value) {
    if (!cfg.valid()) throw std::invalid_argument("LfsrConfig invalid");
    if (value == 0) throw StuckSeed("LFSR seed is all-zeros");
    return LfsrState{cfg, value};
}

} // namespace detail

/// Load an external seed. All-zeros genuinely wedges a Galois LFSR; the
/// all-ones filter is applied as well so that both protocol sides agree on
/// the same validity rule.
inline LfsrState load_seed(const LfsrConfig& cfg, const BitVec& seed) {
    if (!cfg.valid()) throw std::invalid_argument("LfsrConfig invalid");
    if (static_cast<int>(seed.size()) != cfg.width)
        throw std::invalid_argument("load_seed: seed width mismatch");
    if (seed.all_zeros() || seed.all_ones())
        throw StuckSeed("LFSR seed is all-zeros or all-ones");
    return LfsrState{cfg, seed.to_uint()};
}

/// Apply `count` Galois steps: emit the LSB, shift right, and when the
/// emitted bit is 1 XOR the feedback mask into the register. count = 0 is
/// the identity.
inline LfsrState shift(const LfsrState& state, std::uint64_t count) {
    std::uint64_t mask = detail::galois_mask(state.config);
    std::uint64_t r = state.reg;
    for (std::uint64_t i = 0; i < count; ++i) {
        std::uint64_t out = r & 1u;
        r >>= 1;
        if (out) r ^= mask;
    }
    return LfsrState{state.config, r};
}

/// Brute-force cycle length from the given seed. Test oracle for
/// primitivity; bounded so it stays a desk-scale operation.
inline std::uint64_t measured_period(const LfsrConfig& cfg, const BitVec& seed) {
    if (cfg.width > 24) throw std::invalid_argument("measured_period: width over brute-force bound");
    LfsrState s = load_seed(cfg, seed);
    std::uint64_t start = s.reg;
    std::uint64_t mask = detail::galois_mask(cfg);
    std::uint64_t r = start;
    std::uint64_t p = 0;
    do {
        std::uint64_t out = r & 1u;
        r >>= 1;
        if (out) r ^= mask;
        ++p;
    } while (r != start);
    return p;
}

/// Parse "x^4+x+1"-style text into a config. Terms may appear in any order;
/// the highest exponent fixes the width.
inline LfsrConfig parse_poly(const std::string& text) {
    std::vector<int> exps;
    std::size_t i = 0;
    auto skip_ws = [&] { while (i < text.size() && text[i] == ' ') ++i; };
    while (i < text.size()) {
        skip_ws();
        if (text[i] == 'x') {
            ++i;
            if (i < text.size() && text[i] == '^') {
                ++i;
                int e = 0;
                if (i >= text.size() || text[i] < '0' || text[i] > '9')
                    throw std::invalid_argument("parse_poly: exponent expected");
                while (i < text.size() && text[i] >= '0' && text[i] <= '9')
                    e = e * 10 + (text[i++] - '0');
                exps.push_back(e);
            } else {
                exps.push_back(1);
            }
        } else if (text[i] == '1') {
            ++i;
            exps.push_back(0);
        } else {
            throw std::invalid_argument("parse_poly: unexpected character");
        }
        skip_ws();
        if (i < text.size()) {
            if (text[i] != '+') throw std::invalid_argument("parse_poly: '+' expected");
            ++i;
        }
    }
    if (exps.empty()) throw std::invalid_argument("parse_poly: empty polynomial");
    int width = 0;
    for (int e : exps) width = std::max(width, e);
    if (width < 2 || width > 64) throw std::invalid_argument("parse_poly: degree out of range");
    BitVec taps(static_cast<std::size_t>(width));
    bool monic = false, constant = false;
    for (int e : exps) {
        if (e == width) { monic = true; continue; }
        if (e == 0) constant = true;
        if (taps.bit(static_cast<std::size_t>(width - e)) == 1)
            throw std::invalid_argument("parse_poly: repeated term");
        taps.set_bit(static_cast<std::size_t>(width - e), 1);
    }
    if (!monic) throw std::invalid_argument("parse_poly: leading term missing");
    if (!constant) throw std::invalid_argument("parse_poly: constant term missing");
    return LfsrConfig{width, taps};
}

inline std::string poly_to_string(const LfsrConfig& cfg) {
    std::string s = "x^" + std::to_string(cfg.width);
    for (int e = cfg.width - 1; e >= 0; --e) {
        if (cfg.taps.bit(static_cast<std::size_t>(cfg.width - e)) == 0) continue;
        if (e == 0) s += "+1";
        else if (e == 1) s += "+x";
        else s += "+x^" + std::to_string(e);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Primitivity testing over GF(2).
//
// For width <= 20 the cycle length from seed 1 is checked directly. For 32
// and 64 (the only larger widths shipped) an order test is used: x has order
// 2^w - 1 in GF(2)[x]/p(x) iff x^(2^w) = x and x^((2^w-1)/q) != 1 for every
// prime q | 2^w - 1. Since lcm of subfield orders is strictly below 2^w - 1
// for any reducible p, full order already implies p primitive.
// ---------------------------------------------------------------------------

namespace detail {

/// (a * b) mod p over GF(2), with deg a, deg b < w and p monic of degree w
/// represented by its low coefficient bits (x^w ≡ p_low mod p). Schoolbook
/// shift-xor; w <= 64.
inline std::uint64_t gf2_mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t p_low, int w) {
    std::uint64_t wmask = width_mask(w);
    std::uint64_t acc = 0;
    // invariant: a always holds a polynomial of degree < w
    while (b) {
        if (b & 1u) acc ^= a;
        b >>= 1;
        bool carry = ((a >> (w - 1)) & 1u) != 0;
        a = (a << 1) & wmask;
        if (carry) a ^= p_low;
    }
    return acc & wmask;
}

inline std::uint64_t gf2_powmod(std::uint64_t base, std::uint64_t exp, std::uint64_t p_low, int w) {
    std::uint64_t result = 1;
    while (exp) {
        if (exp & 1u) result = gf2_mulmod(result, base, p_low, w);
        base = gf2_mulmod(base, base, p_low, w);
        exp >>= 1;
    }
    return result;
}

/// Prime factors of 2^w - 1 for the shipped widths (all squarefree).
inline const std::vector<std::uint64_t>* mersenne_like_factors(int w) {
    static const std::vector<std::uint64_t> f4{3, 5};
    static const std::vector<std::uint64_t> f8{3, 5, 17};
    static const std::vector<std::uint64_t> f16{3, 5, 17, 257};
    static const std::vector<std::uint64_t> f32{3, 5, 17, 257, 65537};
    static const std::vector<std::uint64_t> f64{3, 5, 17, 257, 641, 65537, 6700417};
    switch (w) {
        case 4: return &f4;
        case 8: return &f8;
        case 16: return &f16;
        case 32: return &f32;
        case 64: return &f64;
        default: return nullptr;
    }
}

} // namespace detail

/// True iff p(x) (given as LfsrConfig taps) is primitive over GF(2).
///
/// Where the factorization of 2^w - 1 is on file, x is tested for full
/// multiplicative order in GF(2)[x]/p: x^(2^w) = x and x^((2^w-1)/q) != 1
/// for every prime q. Full order already implies p irreducible, since the
/// lcm of subfield orders of any reducible p falls short of 2^w - 1. Other
/// widths up to 20 fall back to the brute-force cycle check.
inline bool is_primitive(const LfsrConfig& cfg) {
    if (!cfg.valid()) return false;
    const auto* factors = detail::mersenne_like_factors(cfg.width);
    if (!factors) {
        if (cfg.width <= 20) {
            std::uint64_t full = detail::width_mask(cfg.width);
            return measured_period(cfg, BitVec::from_uint(1, static_cast<std::size_t>(cfg.width)))
                   == full;
        }
        throw std::invalid_argument("is_primitive: unsupported width");
    }
    int w = cfg.width;
    std::uint64_t p_low = cfg.taps.to_uint();
    // x^(2^w) must equal x (w squarings of x)
    std::uint64_t t = 2; // the polynomial "x"
    for (int i = 0; i < w; ++i) t = detail::gf2_mulmod(t, t, p_low, w);
    if (t != 2) return false;
    std::uint64_t order = detail::width_mask(w); // 2^w - 1
    for (std::uint64_t q : *factors) {
        if (detail::gf2_powmod(2, order / q, p_low, w) == 1) return false;
    }
    return true;
}

/// Number of degree-w primitive polynomials: phi(2^w - 1) / w, with phi
/// taken over the squarefree factor table.
inline std::uint64_t primitive_count(int width) {
    const auto* factors = detail::mersenne_like_factors(width);
    if (!factors) throw std::invalid_argument("primitive_count: unsupported width");
    std::uint64_t phi = 1;
    for (std::uint64_t q : *factors) phi *= q - 1;
    return phi / static_cast<std::uint64_t>(width);
}

/// Deterministic enumeration of primitive polynomials: taps values are
/// scanned in ascending order, so a given (width, index) always names the
/// same polynomial. Lets the registration step hand each device its own p_k.
inline LfsrConfig primitive_taps(int width, std::size_t index) {
    if (detail::mersenne_like_factors(width) == nullptr)
        throw std::invalid_argument("primitive_taps: unsupported width");
    std::uint64_t wmask = detail::width_mask(width);
    std::size_t found = 0;
    // constant term must be set, so step by 2
    for (std::uint64_t t = 1; t <= wmask; t += 2) {
        LfsrConfig cfg{width, BitVec::from_uint(t, static_cast<std::size_t>(width))};
        if (is_primitive(cfg)) {
            if (found == index) return cfg;
            ++found;
        }
        if (t == wmask) break; // avoid wrap at width 64
    }
    throw std::invalid_argument("primitive_taps: index exhausts the width's polynomials");
}

/// Device assignment wraps once a width's polynomial supply is exhausted
/// (width 4 only has two).
inline LfsrConfig assign_primitive(int width, std::size_t ordinal) {
    std::uint64_t count = primitive_count(width);
    std::uint64_t capped = std::min<std::uint64_t>(count, 4096); // keep the scan bounded
    return primitive_taps(width, ordinal % capped);
}

/// Shipped default polynomials, one per supported width. The 4/8/16 entries
/// are verified by measured_period in the test suite; 32 and 64 come from
/// the standard published shift-register tap tables and are re-validated by
/// the order test above.
inline LfsrConfig default_lfsr_config(int width) {
    switch (width) {
        case 4:  return parse_poly("x^4+x+1");
        case 8:  return parse_poly("x^8+x^4+x^3+x^2+1");
        case 16: return parse_poly("x^16+x^15+x^13+x^4+1");
        case 32: return parse_poly("x^32+x^22+x^2+x+1");
        case 64: return parse_poly("x^64+x^63+x^61+x^60+1");
        default: throw std::invalid_argument("default_lfsr_config: no table entry for width");
    }
}

} // namespace pufforge

#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pufforge/bitvec.hpp"
#include "pufforge/rng.hpp"

namespace pufforge {

/// Device-unique parameters of the Cover bit conversion: message width l,
/// filler width t, and the t distinct positions (1-based, within [1, l+t])
/// where filler bits land in the covered frame. The positions are a pure
/// function of (master seed, device id, l, t), so device and server derive
/// the same config independently.
struct CoverConfig {
    std::size_t l = 128;
    std::size_t t = 10;
    std::vector<std::size_t> fill_positions; // strictly increasing

    bool valid() const {
        if (fill_positions.size() != t) return false;
        std::size_t prev = 0;
        for (std::size_t p : fill_positions) {
            if (p <= prev || p > l + t) return false;
            prev = p;
        }
        return true;
    }
};

/// Keyed deterministic draw of t filling positions without replacement.
inline CoverConfig derive_config(const BitVec& id_k, std::size_t l, std::size_t t,
                                 std::uint64_t master) {
    if (t >= l) throw std::invalid_argument("derive_config: t must be below l");
    // absorb the id bits into the seed 64 bits at a time
    std::uint64_t seed = detail::mix64(master, 0x436f766572ull); // "Cover"
    for (std::size_t i = 0; i < id_k.size(); i += 64) {
        std::uint64_t chunk = 0;
        for (std::size_t j = i; j < std::min(i + 64, id_k.size()); ++j)
            chunk = (chunk << 1) | static_cast<std::uint64_t>(id_k.bit(j + 1));
        seed = detail::mix64(seed, chunk);
    }
    seed = detail::mix64(seed, (static_cast<std::uint64_t>(l) << 32) | t);
    RandomStream rng(seed);

    // partial Fisher-Yates over [1, l+t]
    std::vector<std::size_t> pool(l + t);
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i + 1;
    CoverConfig cfg;
    cfg.l = l;
    cfg.t = t;
    for (std::size_t i = 0; i < t; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.next_below(pool.size() - i));
        std::swap(pool[i], pool[j]);
        cfg.fill_positions.push_back(pool[i]);
    }
    std::sort(cfg.fill_positions.begin(), cfg.fill_positions.end());
    return cfg;
}

/// Y-controlled rearrangement of X. Forward pass walks MSB to LSB emitting
/// x[i] wherever y[i] = 1; the return pass walks LSB back to MSB emitting
/// x[i] wherever y[i] = 0. Every bit of x is emitted exactly once, so for
/// fixed y this is a permutation.
inline BitVec per(const BitVec& x, const BitVec& y) {
    if (x.size() != y.size()) throw std::invalid_argument("per: length mismatch");
    BitVec z(x.size());
    std::size_t out = 0;
    for (std::size_t i = 1; i <= y.size(); ++i)
        if (y.bit(i) == 1) z.set_bit(++out, x.bit(i));
    for (std::size_t i = y.size(); i-- > 0; )
        if (y.bit(i + 1) == 0) z.set_bit(++out, x.bit(i + 1));
    return z;
}

namespace detail {

/// Destination slot of each x index under per(·, y), in walk order.
inline std::vector<std::size_t> per_order(const BitVec& y) {
    std::vector<std::size_t> src; // src[k] = x-index written to output slot k+1
    src.reserve(y.size());
    for (std::size_t i = 1; i <= y.size(); ++i)
        if (y.bit(i) == 1) src.push_back(i);
    for (std::size_t i = y.size(); i-- > 0; )
        if (y.bit(i + 1) == 0) src.push_back(i + 1);
    return src;
}

} // namespace detail

/// Inverse of per: per_inverse(per(x, y), y) = x.
inline BitVec per_inverse(const BitVec& z, const BitVec& y) {
    if (z.size() != y.size()) throw std::invalid_argument("per_inverse: length mismatch");
    std::vector<std::size_t> src = detail::per_order(y);
    BitVec x(z.size());
    for (std::size_t k = 0; k < src.size(); ++k) x.set_bit(src[k], z.bit(k + 1));
    return x;
}

/// Parity adjacent cross XOR: w_i = y_i ^ z_{i+1} for odd i and
/// w_i = y_i ^ z_{i-1} for even i. Requires even length.
inline BitVec cross_xor(const BitVec& z, const BitVec& y) {
    if (z.size() != y.size()) throw std::invalid_argument("cross_xor: length mismatch");
    if (z.size() % 2 != 0) throw std::invalid_argument("cross_xor: odd length");
    BitVec w(z.size());
    for (std::size_t i = 1; i <= z.size(); ++i) {
        std::size_t j = (i % 2 == 1) ? i + 1 : i - 1;
        w.set_bit(i, y.bit(i) ^ z.bit(j));
    }
    return w;
}

/// Inverse of cross_xor: z_{i+1} = w_i ^ y_i for odd i, z_{i-1} = w_i ^ y_i
/// for even i.
inline BitVec cross_xor_inverse(const BitVec& w, const BitVec& y) {
    if (w.size() != y.size()) throw std::invalid_argument("cross_xor_inverse: length mismatch");
    if (w.size() % 2 != 0) throw std::invalid_argument("cross_xor_inverse: odd length");
    BitVec z(w.size());
    for (std::size_t i = 1; i <= w.size(); ++i) {
        std::size_t j = (i % 2 == 1) ? i + 1 : i - 1;
        z.set_bit(j, w.bit(i) ^ y.bit(i));
    }
    return z;
}

/// Insert the t filler bits of f at the configured positions; the bits of w
/// occupy the remaining positions in order.
inline BitVec fill(const BitVec& w, const BitVec& f, const CoverConfig& cfg) {
    if (w.size() != cfg.l || f.size() != cfg.t) throw std::invalid_argument("fill: length mismatch");
    BitVec o(cfg.l + cfg.t);
    std::size_t fi = 0, wi = 0;
    std::size_t next_fill = cfg.t ? cfg.fill_positions[0] : 0;
    for (std::size_t pos = 1; pos <= o.size(); ++pos) {
        if (fi < cfg.t && pos == next_fill) {
            o.set_bit(pos, f.bit(++fi));
            next_fill = fi < cfg.t ? cfg.fill_positions[fi] : 0;
        } else {
            o.set_bit(pos, w.bit(++wi));
        }
    }
    return o;
}

/// Inverse of fill: split a covered frame back into (message part, filler).
inline std::pair<BitVec, BitVec> unfill(const BitVec& o, const CoverConfig& cfg) {
    if (o.size() != cfg.l + cfg.t) throw std::invalid_argument("unfill: length mismatch");
    BitVec w(cfg.l), f(cfg.t);
    std::size_t fi = 0, wi = 0;
    std::size_t next_fill = cfg.t ? cfg.fill_positions[0] : 0;
    for (std::size_t pos = 1; pos <= o.size(); ++pos) {
        if (fi < cfg.t && pos == next_fill) {
            f.set_bit(fi + 1, o.bit(pos));
            ++fi;
            next_fill = fi < cfg.t ? cfg.fill_positions[fi] : 0;
        } else {
            w.set_bit(++wi, o.bit(pos));
        }
    }
    return {w, f};
}

/// Full pipeline: Z = per(message, nonce); W = cross_xor(Z, nonce);
/// O = fill(W, fresh random F, cfg). The filler is redrawn on every call, so
/// equal (message, nonce) pairs still produce differing frames.
inline BitVec cover(const BitVec& message, const BitVec& nonce, const CoverConfig& cfg,
                    RandomStream& rng) {
    if (message.size() != cfg.l || nonce.size() != cfg.l)
        throw std::invalid_argument("cover: length mismatch with config");
    BitVec z = per(message, nonce);
    BitVec w = cross_xor(z, nonce);
    BitVec f = rng.next_bits(cfg.t);
    return fill(w, f, cfg);
}

/// Inverse pipeline; the recovered filler is discarded.
inline BitVec uncover(const BitVec& o, const BitVec& nonce, const CoverConfig& cfg) {
    if (nonce.size() != cfg.l) throw std::invalid_argument("uncover: nonce length mismatch");
    auto [w, f] = unfill(o, cfg);
    BitVec z = cross_xor_inverse(w, nonce);
    return per_inverse(z, nonce);
}

} // namespace pufforge

#pragma once

#include <cstdint>
#include <vector>

#include "pufforge/apuf.hpp"
#include "pufforge/bitvec.hpp"
#include "pufforge/errors.hpp"
#include "pufforge/lfsr.hpp"

namespace pufforge {

/// The composed LFSR-APUF: an n-stage APUF fed by an n-bit Galois LFSR that
/// obfuscates the external challenge. The externally visible challenge is
/// (n+4) bits; the leading 4-bit block steers the shift count, the trailing
/// n bits seed the register. base = 0 disables obfuscation entirely (the
/// control case where the LFSR output equals its seed).
struct LfsrApufDevice {
    ApufInstance apuf;
    LfsrConfig lfsr;
    unsigned base = 10;
    VoteMaskPolicy vote;

    bool valid() const { return apuf.valid() && lfsr.valid() && lfsr.width == apuf.n; }
    std::size_t challenge_width() const { return static_cast<std::size_t>(apuf.n) + 4; }
};

struct SegmentedChallenge {
    BitVec c2; // 4-bit shift-count block (leading positions)
    BitVec c1; // n-bit seed block
};

/// Block segmentation with the 4-bit block at the starting position:
/// c2 = c[1..4], c1 = c[5..n+4]. The seed block must pass the stuck filter.
inline SegmentedChallenge segment_challenge(const BitVec& c) {
    if (c.size() < 5) throw std::invalid_argument("segment_challenge: challenge too short");
    SegmentedChallenge sc{c.slice(1, 4), c.slice(5, c.size())};
    if (sc.c1.all_zeros() || sc.c1.all_ones())
        throw StuckSeed("segment_challenge: C1 is all-zeros or all-ones");
    return sc;
}

/// Shift count = uint(C2) * Base, C2 read MSB-first.
inline std::uint64_t shift_count(const BitVec& c2, std::uint64_t base) {
    return c2.to_uint() * base;
}

/// Seed with C1, shift uint(C2)*base times, and expose the register as the
/// obfuscated challenge C_O.
inline BitVec obfuscate(const LfsrApufDevice& dev, const SegmentedChallenge& sc) {
    LfsrState s = load_seed(dev.lfsr, sc.c1);
    s = shift(s, shift_count(sc.c2, dev.base));
    return s.register_bits();
}

/// Single-bit external response: voted APUF evaluation of the obfuscated
/// challenge.
inline VotedBit respond(const LfsrApufDevice& dev, const BitVec& challenge, RandomStream& rng) {
    SegmentedChallenge sc = segment_challenge(challenge);
    return evaluate_voted(dev.apuf, obfuscate(dev, sc), dev.vote, rng);
}

/// n consecutive register states, one shift apart, starting one shift after
/// the seed. Interior states may be all-ones; only the zero state is
/// genuinely degenerate for a Galois register, so seeding here bypasses the
/// external all-ones filter.
inline std::vector<BitVec> expand_subchallenges(const LfsrApufDevice& dev, const BitVec& seed) {
    if (seed.all_zeros()) throw StuckSeed("expand_subchallenges: zero seed");
    LfsrState s = detail::seed_unchecked(dev.lfsr, seed.to_uint());
    std::vector<BitVec> out;
    out.reserve(static_cast<std::size_t>(dev.apuf.n));
    for (int j = 0; j < dev.apuf.n; ++j) {
        s = shift(s, 1);
        out.push_back(s.register_bits());
    }
    return out;
}

struct WordResponse {
    BitVec r;
    bool all_stable = false;
};

/// Protocol-mode n-bit response. The round's own Base_i overrides the device
/// default: the obfuscated challenge n_Lc seeds the expansion, each expanded
/// sub-challenge is evaluated with voting, and all_stable reports whether
/// every position was decisive.
inline WordResponse respond_word(const LfsrApufDevice& dev, const BitVec& n_c,
                                 std::uint64_t base_i, RandomStream& rng) {
    if (n_c.size() != dev.challenge_width())
        throw std::invalid_argument("respond_word: challenge width mismatch");
    SegmentedChallenge sc = segment_challenge(n_c);
    LfsrState s = load_seed(dev.lfsr, sc.c1);
    s = shift(s, shift_count(sc.c2, base_i));
    BitVec n_lc = s.register_bits();

    std::vector<BitVec> subs = expand_subchallenges(dev, n_lc);
    WordResponse out;
    out.r = BitVec(subs.size());
    out.all_stable = true;
    for (std::size_t j = 0; j < subs.size(); ++j) {
        VotedBit vb = evaluate_voted(dev.apuf, subs[j], dev.vote, rng);
        out.r.set_bit(j + 1, vb.bit);
        out.all_stable = out.all_stable && vb.stable;
    }
    return out;
}

} // namespace pufforge

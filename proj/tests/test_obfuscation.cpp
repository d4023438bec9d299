#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "pufforge/obfuscation.hpp"

using namespace pufforge;

namespace {

LfsrApufDevice make_device(int n, unsigned base, double noise_sigma, std::uint64_t seed,
                           VoteMaskPolicy vote = VoteMaskPolicy{1, 1}) {
    RandomStream rng(seed);
    LfsrApufDevice dev;
    dev.apuf = sample_instance(n, 1.0, noise_sigma, rng);
    dev.lfsr = default_lfsr_config(n);
    dev.base = base;
    dev.vote = vote;
    return dev;
}

} // namespace

TEST_CASE("segment_challenge splits positionally") {
    SegmentedChallenge sc = segment_challenge(BitVec::from_string("01101011"));
    REQUIRE(sc.c2 == BitVec::from_string("0110"));
    REQUIRE(sc.c1 == BitVec::from_string("1011"));

    sc = segment_challenge(BitVec::from_string("11110101"));
    REQUIRE(sc.c2 == BitVec::from_string("1111"));
    REQUIRE(sc.c1 == BitVec::from_string("0101"));

    REQUIRE_THROWS_AS(segment_challenge(BitVec::from_string("00000000")), StuckSeed);
    REQUIRE_THROWS_AS(segment_challenge(BitVec::from_string("00001111")), StuckSeed);
}

TEST_CASE("shift_count multiplies the C2 value by Base") {
    REQUIRE(shift_count(BitVec::from_string("0110"), 1) == 6);
    REQUIRE(shift_count(BitVec::from_string("0110"), 100) == 600);
    REQUIRE(shift_count(BitVec::from_string("0000"), 17) == 0);
}

TEST_CASE("obfuscate: base 0 is the identity, full period returns the seed") {
    LfsrApufDevice dev = make_device(4, 0, 0.0, 1);
    SegmentedChallenge sc = segment_challenge(BitVec::from_string("10110001"));
    REQUIRE(obfuscate(dev, sc) == sc.c1);

    dev.base = 15; // uint(C2)=1 with base 15 gives the full period of x^4+x+1
    sc = segment_challenge(BitVec::from_string("00010110"));
    REQUIRE(obfuscate(dev, sc) == sc.c1);
}

TEST_CASE("obfuscate single-step trace") {
    LfsrApufDevice dev = make_device(4, 1, 0.0, 2);
    SegmentedChallenge sc;
    sc.c1 = BitVec::from_string("0001");
    sc.c2 = BitVec::from_string("0001");
    REQUIRE(obfuscate(dev, sc) == BitVec::from_string("1001"));
}

TEST_CASE("respond with base 0 reduces to the bare APUF on C1") {
    LfsrApufDevice dev = make_device(8, 0, 0.0, 3);
    RandomStream rng(10);
    for (int k = 0; k < 30; ++k) {
        BitVec c = rng.next_bits(12);
        SegmentedChallenge sc;
        try {
            sc = segment_challenge(c);
        } catch (const StuckSeed&) {
            continue;
        }
        RandomStream e1(77), e2(77);
        VotedBit vb = respond(dev, c, e1);
        REQUIRE(vb.stable);
        REQUIRE(vb.bit == evaluate_raw(dev.apuf, sc.c1, e2));
    }
}

TEST_CASE("respond is deterministic") {
    LfsrApufDevice dev = make_device(16, 10, 0.4, 4, VoteMaskPolicy{11, 9});
    BitVec c = RandomStream(6).next_bits(20);
    RandomStream e1(123), e2(123);
    VotedBit a = respond(dev, c, e1);
    VotedBit b = respond(dev, c, e2);
    REQUIRE(a.bit == b.bit);
    REQUIRE(a.stable == b.stable);
}

TEST_CASE("expand_subchallenges walks consecutive states") {
    LfsrApufDevice dev = make_device(4, 1, 0.0, 5);
    auto subs = expand_subchallenges(dev, BitVec::from_string("0001"));
    REQUIRE(subs.size() == 4);
    REQUIRE(subs[0] == BitVec::from_string("1001"));
    REQUIRE(subs[1] == BitVec::from_string("1101"));
    REQUIRE(subs[2] == BitVec::from_string("1111"));
    REQUIRE(subs[3] == BitVec::from_string("1110"));

    // distinct, never all-zeros
    std::set<std::string> seen;
    for (const auto& s : subs) {
        REQUIRE_FALSE(s.all_zeros());
        seen.insert(s.to_string());
    }
    REQUIRE(seen.size() == subs.size());

    // interior all-ones states are allowed as expansion seeds
    auto from_ones = expand_subchallenges(dev, BitVec::from_string("1111"));
    REQUIRE(from_ones.size() == 4);
    REQUIRE_THROWS_AS(expand_subchallenges(dev, BitVec::from_string("0000")), StuckSeed);
}

TEST_CASE("respond_word: zero base reduces to direct expansion of C1") {
    LfsrApufDevice dev = make_device(4, 7, 0.0, 8);
    BitVec n_c = BitVec::from_string("01100001"); // C2=0110, C1=0001
    RandomStream e1(9);
    WordResponse wr = respond_word(dev, n_c, 0, e1);
    REQUIRE(wr.r.size() == 4);
    REQUIRE(wr.all_stable);

    auto subs = expand_subchallenges(dev, BitVec::from_string("0001"));
    for (std::size_t j = 0; j < subs.size(); ++j) {
        RandomStream quiet(1);
        REQUIRE(wr.r.bit(j + 1) == evaluate_raw(dev.apuf, subs[j], quiet));
    }
}

TEST_CASE("respond_word determinism and shape at n = 64") {
    LfsrApufDevice dev = make_device(64, 10, 0.0, 11);
    BitVec n_c = RandomStream(13).next_bits(68);
    RandomStream e1(14), e2(14);
    WordResponse a = respond_word(dev, n_c, 10, e1);
    WordResponse b = respond_word(dev, n_c, 10, e2);
    REQUIRE(a.r.size() == 64);
    REQUIRE(a.r == b.r);
    REQUIRE(a.all_stable == b.all_stable);
}

TEST_CASE("obfuscation is injective over valid seeds") {
    for (int n : {4, 8}) {
        LfsrApufDevice dev = make_device(n, 3, 0.0, 20 + static_cast<unsigned>(n));
        std::uint64_t full = (1ull << n) - 1;
        for (std::uint64_t c2v = 0; c2v < 16; c2v += 5) {
            std::set<std::uint64_t> images;
            std::size_t domain = 0;
            for (std::uint64_t c1v = 1; c1v < full; ++c1v) {
                SegmentedChallenge sc;
                sc.c1 = BitVec::from_uint(c1v, static_cast<std::size_t>(n));
                sc.c2 = BitVec::from_uint(c2v, 4);
                images.insert(obfuscate(dev, sc).to_uint());
                ++domain;
            }
            REQUIRE(images.size() == domain);
        }
    }
}

TEST_CASE("composition avalanche: flipping a C2 bit moves the obfuscated challenge") {
    const int n = 64;
    LfsrApufDevice dev = make_device(n, 10, 0.0, 33);
    RandomStream rng(44);
    double total = 0;
    const int trials = 200;
    for (int k = 0; k < trials; ++k) {
        BitVec c = rng.next_bits(68);
        SegmentedChallenge sc;
        try {
            sc = segment_challenge(c);
        } catch (const StuckSeed&) {
            --k;
            continue;
        }
        std::size_t flip = 1 + rng.next_below(4);
        SegmentedChallenge alt = sc;
        alt.c2.set_bit(flip, 1 - alt.c2.bit(flip));
        total += static_cast<double>(hd_count(obfuscate(dev, sc), obfuscate(dev, alt)));
    }
    double mean = total / trials;
    REQUIRE(mean > 0.4 * n);
    REQUIRE(mean < 0.6 * n);
}

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "pufforge/cover.hpp"

using namespace pufforge;

TEST_CASE("derive_config is deterministic and well-shaped") {
    BitVec id = BitVec::from_hex("64:DEADBEEF00C0FFEE");
    CoverConfig a = derive_config(id, 128, 10, 99);
    CoverConfig b = derive_config(id, 128, 10, 99);
    REQUIRE(a.fill_positions == b.fill_positions);
    REQUIRE(a.valid());

    CoverConfig small = derive_config(id, 4, 2, 1);
    REQUIRE(small.fill_positions.size() == 2);
    for (std::size_t p : small.fill_positions) {
        REQUIRE(p >= 1);
        REQUIRE(p <= 6);
    }
}

TEST_CASE("neighbouring ids give different configs") {
    RandomStream rng(3);
    int collisions = 0;
    for (int k = 0; k < 100; ++k) {
        BitVec id = rng.next_bits(64);
        BitVec other = id;
        std::size_t flip = 1 + rng.next_below(64);
        other.set_bit(flip, 1 - other.bit(flip));
        if (derive_config(id, 128, 10, 7).fill_positions ==
            derive_config(other, 128, 10, 7).fill_positions)
            ++collisions;
    }
    REQUIRE(collisions == 0);
}

TEST_CASE("per fixed cases") {
    BitVec x = BitVec::from_string("1011");
    REQUIRE(per(x, BitVec::from_string("1111")) == x);
    REQUIRE(per(x, BitVec::from_string("0000")) == BitVec::from_string("1101")); // reversed
    // forward pass picks x2,x3; return pass (i = 4..1) picks x4,x1
    REQUIRE(per(x, BitVec::from_string("0110")) == BitVec::from_string("0111"));
    REQUIRE_THROWS_AS(per(x, BitVec::from_string("011")), std::invalid_argument);
}

TEST_CASE("per is a permutation for every y (exhaustive small widths)") {
    for (std::size_t l : {4u, 6u, 8u}) {
        for (std::uint64_t yv = 0; yv < (1ull << l); ++yv) {
            BitVec y = BitVec::from_uint(yv, l);
            std::set<std::uint64_t> images;
            for (std::uint64_t xv = 0; xv < (1ull << l); ++xv) {
                BitVec x = BitVec::from_uint(xv, l);
                BitVec z = per(x, y);
                REQUIRE(z.popcount() == x.popcount()); // multiset preserved
                images.insert(z.to_uint());
                REQUIRE(per_inverse(z, y) == x);
            }
            REQUIRE(images.size() == (1ull << l));
        }
    }
}

TEST_CASE("per_inverse fixed cases") {
    REQUIRE(per_inverse(BitVec::from_string("0111"), BitVec::from_string("0110")) ==
            BitVec::from_string("1011"));
    BitVec z = BitVec::from_string("0101");
    REQUIRE(per_inverse(z, BitVec::from_string("1111")) == z);
}

TEST_CASE("cross_xor fixed cases") {
    BitVec y = BitVec::from_string("0110");
    REQUIRE(cross_xor(BitVec::from_string("0000"), y) == y);
    // w1 = y1^z2, w2 = y2^z1, w3 = y3^z4, w4 = y4^z3
    REQUIRE(cross_xor(BitVec::from_string("0111"), y) == BitVec::from_string("1101"));
    REQUIRE_THROWS_AS(cross_xor(BitVec::from_string("011"), BitVec::from_string("010")),
                      std::invalid_argument);

    // pair-symmetric z with y = z cancels exactly
    BitVec sym = BitVec::from_string("110011");
    REQUIRE(cross_xor(sym, sym) == BitVec(6));
}

TEST_CASE("cross_xor_inverse undoes cross_xor") {
    REQUIRE(cross_xor_inverse(BitVec::from_string("1101"), BitVec::from_string("0110")) ==
            BitVec::from_string("0111"));
    BitVec y = BitVec::from_string("0110");
    REQUIRE(cross_xor_inverse(y, y) == BitVec(4));

    RandomStream rng(17);
    for (int k = 0; k < 50; ++k) {
        BitVec z = rng.next_bits(128);
        BitVec yy = rng.next_bits(128);
        REQUIRE(cross_xor_inverse(cross_xor(z, yy), yy) == z);
    }
}

TEST_CASE("fill and unfill fixed case") {
    CoverConfig cfg;
    cfg.l = 4;
    cfg.t = 2;
    cfg.fill_positions = {1, 6};
    BitVec w = BitVec::from_string("1011");
    BitVec f = BitVec::from_string("01");
    BitVec o = fill(w, f, cfg);
    REQUIRE(o == BitVec::from_string("010111"));
    auto [w2, f2] = unfill(o, cfg);
    REQUIRE(w2 == w);
    REQUIRE(f2 == f);
}

TEST_CASE("fill with t = 0 is the identity") {
    CoverConfig cfg;
    cfg.l = 8;
    cfg.t = 0;
    BitVec w = BitVec::from_string("10110010");
    REQUIRE(fill(w, BitVec(0), cfg) == w);
}

TEST_CASE("fill round trip on random configs") {
    RandomStream rng(23);
    for (int k = 0; k < 200; ++k) {
        CoverConfig cfg = derive_config(rng.next_bits(64), 128, 10, 5);
        BitVec w = rng.next_bits(128);
        BitVec f = rng.next_bits(10);
        auto [w2, f2] = unfill(fill(w, f, cfg), cfg);
        REQUIRE(w2 == w);
        REQUIRE(f2 == f);
    }
}

TEST_CASE("unfill with the wrong config mangles the message") {
    RandomStream rng(29);
    int wrong = 0;
    const int trials = 200;
    for (int k = 0; k < trials; ++k) {
        CoverConfig cfg = derive_config(rng.next_bits(64), 128, 10, 5);
        CoverConfig other = derive_config(rng.next_bits(64), 128, 10, 5);
        BitVec w = rng.next_bits(128);
        BitVec f = rng.next_bits(10);
        if (unfill(fill(w, f, cfg), other).first != w) ++wrong;
    }
    REQUIRE(wrong >= static_cast<int>(trials * 0.95));
}

TEST_CASE("cover/uncover round trip") {
    RandomStream rng(31);
    for (int k = 0; k < 500; ++k) {
        CoverConfig cfg = derive_config(rng.next_bits(64), 128, 10, 13);
        BitVec m = rng.next_bits(128);
        BitVec nonce = rng.next_bits(128);
        BitVec o = cover(m, nonce, cfg, rng);
        REQUIRE(o.size() == 138);
        REQUIRE(uncover(o, nonce, cfg) == m);
    }
}

TEST_CASE("repeat covers differ only in filler positions") {
    RandomStream rng(37);
    CoverConfig cfg = derive_config(rng.next_bits(64), 128, 10, 13);
    BitVec m = rng.next_bits(128);
    BitVec nonce = rng.next_bits(128);
    BitVec a = cover(m, nonce, cfg, rng);
    BitVec b = cover(m, nonce, cfg, rng);
    for (std::size_t pos = 1; pos <= a.size(); ++pos) {
        bool is_fill = std::find(cfg.fill_positions.begin(), cfg.fill_positions.end(), pos) !=
                       cfg.fill_positions.end();
        if (!is_fill) REQUIRE(a.bit(pos) == b.bit(pos));
    }
}

TEST_CASE("uncover with a wrong nonce or config fails to recover") {
    RandomStream rng(41);
    int nonce_wrong = 0, cfg_wrong = 0;
    const int trials = 1000;
    for (int k = 0; k < trials; ++k) {
        CoverConfig cfg = derive_config(rng.next_bits(64), 128, 10, 17);
        CoverConfig other = derive_config(rng.next_bits(64), 128, 10, 17);
        BitVec m = rng.next_bits(128);
        BitVec nonce = rng.next_bits(128);
        BitVec o = cover(m, nonce, cfg, rng);
        BitVec bad_nonce = rng.next_bits(128);
        if (uncover(o, bad_nonce, cfg) != m) ++nonce_wrong;
        if (uncover(o, nonce, other) != m) ++cfg_wrong;
    }
    REQUIRE(nonce_wrong >= static_cast<int>(trials * 0.99));
    REQUIRE(cfg_wrong >= static_cast<int>(trials * 0.99));
}

TEST_CASE("filler bits are unbiased across covers") {
    RandomStream rng(43);
    CoverConfig cfg = derive_config(rng.next_bits(64), 128, 10, 19);
    BitVec m = rng.next_bits(128);
    BitVec nonce = rng.next_bits(128);
    std::vector<int> ones(cfg.t, 0);
    const int trials = 10000;
    for (int k = 0; k < trials; ++k) {
        BitVec o = cover(m, nonce, cfg, rng);
        for (std::size_t j = 0; j < cfg.t; ++j)
            ones[j] += o.bit(cfg.fill_positions[j]);
    }
    for (std::size_t j = 0; j < cfg.t; ++j) {
        double bias = std::abs(static_cast<double>(ones[j]) / trials - 0.5);
        REQUIRE(bias < 0.05);
    }
}

TEST_CASE("config space size matches the binomial count") {
    // C(138, 10) computed exactly; every prefix of the product is integral
    // and the result fits a double mantissa
    long double c = 1.0L;
    for (int i = 1; i <= 10; ++i) c = c * (138 - 10 + i) / i;
    REQUIRE(static_cast<double>(c) == 494360799979761.0);
    REQUIRE(static_cast<double>(c) > 4.8e14); // the quoted ~4.9e14 schemes
    REQUIRE(static_cast<double>(c) < 5.0e14);
}

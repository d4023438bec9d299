#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "delay_oracle.hpp"
#include "pufforge/apuf.hpp"

using namespace pufforge;

namespace {

std::vector<double> phi_of(const char* challenge) {
    return phi_transform(BitVec::from_string(challenge));
}

} // namespace

TEST_CASE("phi_transform hand expansions") {
    REQUIRE(phi_of("000") == std::vector<double>{1, 1, 1, 1});
    REQUIRE(phi_of("100") == std::vector<double>{-1, 1, 1, 1});
    // c = 011: phi1 = (1)(-1)(-1) = 1, phi2 = (-1)(-1) = 1, phi3 = -1
    REQUIRE(phi_of("011") == std::vector<double>{1, 1, -1, 1});
}

TEST_CASE("phi entries are all +/-1 with a trailing 1") {
    RandomStream rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        BitVec c = rng.next_bits(64);
        auto phi = phi_transform(c);
        REQUIRE(phi.size() == 65);
        REQUIRE(phi.back() == 1.0);
        for (double v : phi) REQUIRE(std::abs(v) == 1.0);
    }
}

TEST_CASE("flipping challenge bit i flips phi entries at or below i") {
    RandomStream rng(32);
    BitVec c = rng.next_bits(16);
    auto base = phi_transform(c);
    for (std::size_t i = 1; i <= 16; ++i) {
        BitVec flipped = c;
        flipped.set_bit(i, 1 - c.bit(i));
        auto phi = phi_transform(flipped);
        for (std::size_t l = 1; l <= 17; ++l) {
            if (l <= i) REQUIRE(phi[l - 1] == -base[l - 1]);
            else REQUIRE(phi[l - 1] == base[l - 1]);
        }
    }
}

TEST_CASE("sample_instance determinism and shape") {
    RandomStream a(77), b(77);
    ApufInstance x = sample_instance(64, 1.0, 0.0, a);
    ApufInstance y = sample_instance(64, 1.0, 0.0, b);
    REQUIRE(x.weights == y.weights);
    REQUIRE(x.weights.size() == 65);

    RandomStream c(5);
    REQUIRE(sample_instance(2, 1.0, 0.0, c).weights.size() == 3);
    REQUIRE_THROWS_AS(sample_instance(64, 0.0, 0.0, c), std::invalid_argument);
    REQUIRE_THROWS_AS(sample_instance(1, 1.0, 0.0, c), std::invalid_argument);
}

TEST_CASE("sampled weights have near-zero mean") {
    RandomStream rng(123);
    double total = 0;
    std::size_t count = 0;
    for (int i = 0; i < 10; ++i) {
        ApufInstance inst = sample_instance(64, 1.0, 0.0, rng);
        for (double w : inst.weights) { total += w; ++count; }
    }
    REQUIRE(std::abs(total / static_cast<double>(count)) < 0.2);
}

TEST_CASE("evaluate_raw sign convention") {
    RandomStream rng(1);
    ApufInstance inst;
    inst.n = 3;
    inst.noise_sigma = 0.0;
    BitVec c = BitVec::from_string("000");

    inst.weights = {1, 0, 0, 0};
    REQUIRE(evaluate_raw(inst, c, rng) == 1);
    inst.weights = {-1, 0, 0, 0};
    REQUIRE(evaluate_raw(inst, c, rng) == 0);
    inst.weights = {0, 0, 0, 0}; // delta exactly zero maps to 1
    REQUIRE(evaluate_raw(inst, c, rng) == 1);
}

TEST_CASE("determinism of full evaluations") {
    RandomStream s1(900), s2(900);
    ApufInstance i1 = sample_instance(16, 1.0, 0.3, s1);
    ApufInstance i2 = sample_instance(16, 1.0, 0.3, s2);
    RandomStream e1 = s1.split(4), e2 = s2.split(4);
    BitVec c = RandomStream(8).next_bits(16);
    for (int k = 0; k < 50; ++k)
        REQUIRE(evaluate_raw(i1, c, e1) == evaluate_raw(i2, c, e2));
}

TEST_CASE("voting: noiseless evaluations are unanimous") {
    RandomStream rng(55);
    ApufInstance inst = sample_instance(8, 1.0, 0.0, rng);
    VoteMaskPolicy policy{5, 5};
    RandomStream eval = rng.split(1);
    for (int k = 0; k < 20; ++k) {
        BitVec c = rng.next_bits(8);
        VotedBit vb = evaluate_voted(inst, c, policy, eval);
        RandomStream raw(999);
        ApufInstance clean = inst;
        clean.noise_sigma = 0.0;
        REQUIRE(vb.stable);
        REQUIRE(vb.bit == evaluate_raw(clean, c, raw));
    }
}

TEST_CASE("voting: wide margin is stable with overwhelming probability") {
    // |delta| = 10 sigma; per-eval flip probability ~ 7.6e-24
    ApufInstance inst;
    inst.n = 2;
    inst.weights = {0, 0, 10.0}; // delta = 10 for every challenge
    inst.noise_sigma = 1.0;
    VoteMaskPolicy policy{11, 10};
    RandomStream rng(42);
    BitVec c = BitVec::from_string("00");
    for (int k = 0; k < 1000; ++k) {
        VotedBit vb = evaluate_voted(inst, c, policy, rng);
        REQUIRE(vb.stable);
        REQUIRE(vb.bit == 1);
    }
}

TEST_CASE("voting: zero margin matches the binomial oracle") {
    // delta = 0, sigma = 1: every vote is a fair coin. stable needs >= 10 of
    // 11 on one side: P = 2 * (C(11,10) + C(11,11)) / 2^11 = 24/2048.
    ApufInstance inst;
    inst.n = 2;
    inst.weights = {0, 0, 0};
    inst.noise_sigma = 1.0;
    VoteMaskPolicy policy{11, 10};
    RandomStream rng(4242);
    BitVec c = BitVec::from_string("00");
    int stable_count = 0;
    const int trials = 20000;
    for (int k = 0; k < trials; ++k)
        if (evaluate_voted(inst, c, policy, rng).stable) ++stable_count;
    double expected = 24.0 / 2048.0;
    double observed = static_cast<double>(stable_count) / trials;
    REQUIRE(std::abs(observed - expected) < 0.004);
}

TEST_CASE("linearity oracle: model matches the two-path delay simulator") {
    for (int n : {4, 8, 16}) {
        RandomStream rng(1000 + n);
        ApufInstance inst = sample_instance(n, 1.0, 0.0, rng);
        oracle::StageDelays delays = oracle::delays_from_weights(inst, rng);

        // the constructed delays must reproduce the weights they came from
        auto recovered = oracle::weights_from_delays(delays);
        for (std::size_t i = 0; i < recovered.size(); ++i)
            REQUIRE(std::abs(recovered[i] - inst.weights[i]) < 1e-9);

        RandomStream eval(7);
        for (int k = 0; k < 1000; ++k) {
            BitVec c = rng.next_bits(static_cast<std::size_t>(n));
            REQUIRE(evaluate_raw(inst, c, eval) == oracle::arbiter_response(delays, c));
        }
    }
}

TEST_CASE("reliability is non-decreasing in the vote count") {
    RandomStream rng(2223);
    int n = 32;
    double sigma = calibrated_noise_sigma(n, 1.0, 0.95);
    ApufInstance inst = sample_instance(n, 1.0, sigma, rng);
    ApufInstance clean = inst;
    clean.noise_sigma = 0.0;

    auto reliability_at = [&](int votes) {
        VoteMaskPolicy policy{votes, (votes + 1) / 2};
        RandomStream eval(5150);
        RandomStream chall(61);
        int agree = 0, total = 0;
        for (int k = 0; k < 500; ++k) {
            BitVec c = chall.next_bits(static_cast<std::size_t>(n));
            RandomStream quiet(1);
            int ref = evaluate_raw(clean, c, quiet);
            for (int rep = 0; rep < 10; ++rep) {
                agree += evaluate_voted(inst, c, policy, eval).bit == ref;
                ++total;
            }
        }
        return static_cast<double>(agree) / total;
    };

    double r1 = reliability_at(1);
    double r11 = reliability_at(11);
    REQUIRE(r11 >= r1 - 0.005);
    REQUIRE(r1 > 0.90); // calibrated to ~0.95
    REQUIRE(r1 < 0.99);
}

TEST_CASE("calibrated noise hits the raw reliability target") {
    RandomStream rng(31415);
    int n = 64;
    double sigma = calibrated_noise_sigma(n, 1.0, 0.95);
    ApufInstance inst = sample_instance(n, 1.0, sigma, rng);
    ApufInstance clean = inst;
    clean.noise_sigma = 0.0;
    RandomStream eval(27);
    RandomStream chall(28);
    int agree = 0;
    const int total = 40000;
    for (int k = 0; k < total; ++k) {
        BitVec c = chall.next_bits(64);
        RandomStream quiet(1);
        agree += evaluate_raw(inst, c, eval) == evaluate_raw(clean, c, quiet);
    }
    double reliability = static_cast<double>(agree) / total;
    REQUIRE(reliability > 0.94);
    REQUIRE(reliability < 0.96);
}

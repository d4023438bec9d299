#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "pufforge/rng.hpp"

using namespace pufforge;

TEST_CASE("equal seeds give equal draw sequences") {
    RandomStream a(42), b(42);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
    REQUIRE(a.next_bits(77) == b.next_bits(77));
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_gaussian() == b.next_gaussian());
}

TEST_CASE("bit bias of next_bits is near one half") {
    RandomStream rng(7);
    std::size_t ones = 0;
    const std::size_t total = 1'000'000;
    BitVec v = rng.next_bits(total);
    ones = v.popcount();
    double freq = static_cast<double>(ones) / static_cast<double>(total);
    REQUIRE(freq > 0.49);
    REQUIRE(freq < 0.51);
}

TEST_CASE("split streams are uncorrelated") {
    RandomStream parent(1234);
    RandomStream a = parent.split(1);
    RandomStream b = parent.split(2);
    const int n = 100'000;
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        double x = a.next_double(), y = b.next_double();
        sx += x; sy += y; sxx += x * x; syy += y * y; sxy += x * y;
    }
    double cov = sxy / n - (sx / n) * (sy / n);
    double vx = sxx / n - (sx / n) * (sx / n);
    double vy = syy / n - (sy / n) * (sy / n);
    double r = cov / std::sqrt(vx * vy);
    REQUIRE(std::abs(r) < 0.05);
}

TEST_CASE("split is a pure function of seed and tag") {
    RandomStream parent(9);
    parent.next_u64(); // advancing the parent must not change children
    RandomStream a = parent.split(3);
    RandomStream fresh(9);
    RandomStream b = fresh.split(3);
    for (int i = 0; i < 10; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("gaussian moments") {
    RandomStream rng(2024);
    const int n = 200'000;
    double s = 0, ss = 0;
    for (int i = 0; i < n; ++i) {
        double z = rng.next_gaussian();
        s += z;
        ss += z * z;
    }
    REQUIRE(std::abs(s / n) < 0.01);
    REQUIRE(std::abs(ss / n - 1.0) < 0.02);
}

TEST_CASE("next_below stays in range and covers values") {
    RandomStream rng(3);
    bool seen[10] = {};
    for (int i = 0; i < 1000; ++i) {
        std::uint64_t v = rng.next_below(10);
        REQUIRE(v < 10);
        seen[v] = true;
    }
    for (bool s : seen) REQUIRE(s);
}

#include "drdel/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "drdel/numeric.hpp"

namespace drdel {
namespace {

TEST(RngStream, SameSeedSameSequence) {
    RngStream a(12345), b(12345);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(RngStream, DifferentSeedsDiverge) {
    RngStream a(1), b(2);
    int equal = 0;
    for (int i = 0; i < 64; ++i)
        if (a.next_u64() == b.next_u64()) ++equal;
    EXPECT_LE(equal, 1);
}

TEST(RngStream, ValueSemantics) {
    RngStream a(777);
    a.normal();  // leave a cached spare behind
    RngStream b = a;
    for (int i = 0; i < 16; ++i) EXPECT_EQ(a.normal(), b.normal());
}

TEST(RngStream, DeriveSeedIsPureAndKeyed) {
    EXPECT_EQ(derive_seed(42, 7), derive_seed(42, 7));
    EXPECT_NE(derive_seed(42, 7), derive_seed(42, 8));
    EXPECT_NE(derive_seed(42, 7), derive_seed(43, 7));
}

TEST(RngStream, PurposeStreamsAreStableAndDistinct) {
    RngStream s1 = stream_for(99, 5);
    RngStream s2 = stream_for(99, 5);
    RngStream other = stream_for(99, 6);
    int equal = 0;
    for (int i = 0; i < 16; ++i) {
        const std::uint64_t v = s1.next_u64();
        EXPECT_EQ(v, s2.next_u64());
        if (v == other.next_u64()) ++equal;
    }
    EXPECT_LE(equal, 1);
    RngStream indexed1 = stream_for(99, 5, 3);
    RngStream indexed2 = stream_for(99, 5, 3);
    for (int i = 0; i < 16; ++i) EXPECT_EQ(indexed1.next_u64(), indexed2.next_u64());
}

TEST(RngStream, Uniform01Bounds) {
    RngStream rng(2024);
    MeanVar mv;
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform01();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        mv.add(u);
    }
    // mean 1/2, variance 1/12; 4 standard errors of slack
    EXPECT_NEAR(mv.mean(), 0.5, 4.0 * std::sqrt(1.0 / 12.0 / 100000.0));
}

TEST(RngStream, UniformBelowIsUnbiased) {
    RngStream rng(555);
    constexpr std::uint64_t n = 7;
    constexpr int draws = 70000;
    std::vector<int> counts(n, 0);
    for (int i = 0; i < draws; ++i) {
        const std::uint64_t v = rng.uniform_below(n);
        ASSERT_LT(v, n);
        ++counts[v];
    }
    const double expected = static_cast<double>(draws) / n;
    const double se = std::sqrt(draws * (1.0 / n) * (1.0 - 1.0 / n));
    for (int c : counts) EXPECT_NEAR(c, expected, 5.0 * se);
}

TEST(RngStream, NormalMoments) {
    RngStream rng(31337);
    MeanVar mv;
    constexpr int n = 200000;
    for (int i = 0; i < n; ++i) mv.add(rng.normal());
    EXPECT_NEAR(mv.mean(), 0.0, 4.0 / std::sqrt(static_cast<double>(n)));
    // SE of the sample variance of a normal is sqrt(2/(n-1))
    EXPECT_NEAR(mv.sample_variance(), 1.0, 4.0 * std::sqrt(2.0 / (n - 1.0)));
}

TEST(RngStream, NormalTailProbability) {
    RngStream rng(60601);
    constexpr int n = 200000;
    int above = 0;
    for (int i = 0; i < n; ++i)
        if (rng.normal() > 1.959963984540054) ++above;
    const double p = 0.024997895148220435;  // P(Z > 1.96)
    const double se = std::sqrt(p * (1 - p) * n);
    EXPECT_NEAR(above, p * n, 4.0 * se);
}

}  // namespace
}  // namespace drdel

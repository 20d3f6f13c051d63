#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

using namespace rubric;

// Expected values come from an independent Python implementation of each algorithm.

TEST(Crc64, MatchesXzCheckValue) {
    EXPECT_EQ(crc64(std::string_view("123456789")), 0x995DC9BBDF1939FAULL);
    EXPECT_EQ(crc64(std::string_view("")), 0x0ULL);
    EXPECT_EQ(crc64(std::string_view("rubric")), 0xd84a0a659ea04ffdULL);
}

TEST(Crc64, IncrementalUpdateEqualsOneShot) {
    Crc64 crc;
    crc.update(std::string_view("1234"));
    crc.update(std::string_view("56789"));
    EXPECT_EQ(crc.value(), crc64(std::string_view("123456789")));
}

TEST(Fnv1a64, KnownVectors) {
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
    EXPECT_EQ(fnv1a64("essay-0001d01"), 0x5d5127add9cd3e4fULL);
}

TEST(SplitMix64, KnownSequenceForSeedZero) {
    SplitMix64 sm(0);
    EXPECT_EQ(sm.next(), 0xe220a8397b1dcdafULL);
    EXPECT_EQ(sm.next(), 0x6e789e6aa1b965f4ULL);
    EXPECT_EQ(sm.next(), 0x06c45d188009454fULL);
}

TEST(Xoshiro256, KnownSequenceForSeed42) {
    Xoshiro256 rng(42);
    EXPECT_EQ(rng.next(), 0x15780b2e0c2ec716ULL);
    EXPECT_EQ(rng.next(), 0x6104d9866d113a7eULL);
    EXPECT_EQ(rng.next(), 0xae17533239e499a1ULL);
    EXPECT_EQ(rng.next(), 0xecb8ad4703b360a1ULL);
}

TEST(Xoshiro256, UniformBelowStaysInRangeAndCoversIt) {
    Xoshiro256 rng(1);
    std::array<int, 7> hits{};
    for (int i = 0; i < 7000; ++i) {
        const auto v = rng.uniform_below(7);
        ASSERT_LT(v, 7u);
        ++hits[v];
    }
    for (int h : hits) {
        EXPECT_GT(h, 850);
        EXPECT_LT(h, 1150);
    }
    EXPECT_EQ(rng.uniform_below(1), 0u);
    EXPECT_EQ(rng.uniform_below(0), 0u);
}

TEST(Xoshiro256, UniformUnitInHalfOpenInterval) {
    Xoshiro256 rng(3);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform_unit();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(Shuffle, IsADeterministicPermutation) {
    std::vector<int> a(50);
    std::iota(a.begin(), a.end(), 0);
    auto b = a;
    Xoshiro256 r1(9), r2(9);
    shuffle(a, r1);
    shuffle(b, r2);
    EXPECT_EQ(a, b);
    auto sorted = a;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> expected(50);
    std::iota(expected.begin(), expected.end(), 0);
    EXPECT_EQ(sorted, expected);
    EXPECT_NE(a, expected);
}

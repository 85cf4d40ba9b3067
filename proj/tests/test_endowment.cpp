#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

#include "cmsim/endowment.hpp"

using namespace cmsim;

namespace {

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

// brute-force harmonic number, summed smallest term first
double harmonic(std::size_t n, double alpha) {
    double h = 0.0;
    for (std::size_t i = n; i >= 1; --i) h += std::pow(static_cast<double>(i), -alpha);
    return h;
}

}  // namespace

TEST(GeneralizedHarmonic, MatchesBruteForce) {
    EXPECT_NEAR(generalized_harmonic(100, 1.0), 5.187377517639621, 1e-12);
    EXPECT_NEAR(generalized_harmonic(1400, 0.6), harmonic(1400, 0.6), 1e-9);
}

TEST(ZipfRanked, InitialCoins) {
    const auto v = zipf_ranked(80'000, 100, 1.0);
    ASSERT_EQ(v.size(), 100u);
    EXPECT_NEAR(v[0], 15422.050877916803, 1e-6);
    EXPECT_NEAR(sum(v), 80'000, 80'000 * 1e-12);
    EXPECT_DOUBLE_EQ(v[1], v[0] / 2);
    EXPECT_TRUE(std::is_sorted(v.rbegin(), v.rend()));
}

TEST(ZipfRanked, SingleAgentTakesAll) {
    EXPECT_EQ(zipf_ranked(10, 1, 1.0), std::vector<double>{10});
}

TEST(ZipfRanked, BadArguments) {
    EXPECT_THROW(zipf_ranked(0, 10, 1.0), std::invalid_argument);
    EXPECT_THROW(zipf_ranked(10, 0, 1.0), std::invalid_argument);
    EXPECT_THROW(zipf_ranked(10, 10, 0.0), std::invalid_argument);
}

TEST(ZipfFromTop, EntrantCash) {
    const auto v = zipf_ranked_from_top(400'000, 1400, 0.6);
    ASSERT_EQ(v.size(), 1400u);
    EXPECT_EQ(v[0], 400'000);
    EXPECT_NEAR(v[1399], 400'000 * std::pow(1400.0, -0.6), 1e-9);
    EXPECT_NEAR(v[1399], 5180.637, 1e-3);
    for (std::size_t i = 0; i < v.size(); ++i)
        EXPECT_NEAR(v[i] / v[0], std::pow(static_cast<double>(i + 1), -0.6), 1e-12);
}

TEST(InitialPopulation, DefaultsHaveConfiguredTotals) {
    std::mt19937_64 rng(3);
    const auto set = initial_population(EndowmentParams{}, rng);
    EXPECT_EQ(set.cash.size(), 100u);
    EXPECT_EQ(set.coins.size(), 100u);
    EXPECT_NEAR(sum(set.coins), 80'000, 80'000 * 1e-12);
    EXPECT_NEAR(sum(set.cash), 400'000, 400'000 * 1e-12);
}

TEST(InitialPopulation, OneTraderHoldsEverything) {
    EndowmentParams p;
    p.initial_traders = 1;
    std::mt19937_64 rng(3);
    const auto set = initial_population(p, rng);
    EXPECT_EQ(set.coins, std::vector<double>{80'000});
    EXPECT_EQ(set.cash, std::vector<double>{400'000});
}

TEST(InitialPopulation, ShufflePreservesValues) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        auto set = initial_population(EndowmentParams{}, rng);
        std::sort(set.coins.begin(), set.coins.end(), std::greater<>());
        EXPECT_EQ(set.coins, zipf_ranked(80'000, 100, 1.0));
    }
}

TEST(EntrantPool, CashOnlyAndRanked) {
    std::mt19937_64 rng(5);
    auto set = entrant_pool(EndowmentParams{}, rng);
    ASSERT_EQ(set.cash.size(), 1400u);
    for (double c : set.coins) EXPECT_EQ(c, 0.0);
    std::sort(set.cash.begin(), set.cash.end(), std::greater<>());
    EXPECT_EQ(set.cash, zipf_ranked_from_top(400'000, 1400, 0.6));
    for (double c : set.cash) EXPECT_GE(c, 0.0);
}

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "cmsim/agents.hpp"

using namespace cmsim;

namespace {

Trader make_trader(Strategy s, double cash, double coins, int window = 5) {
    Trader t;
    t.strategy = s;
    t.cash = cash;
    t.coins = coins;
    t.chartist_window = s == Strategy::Chartist ? window : 0;
    return t;
}

}  // namespace

TEST(Activation, BoundaryProbabilities) {
    std::mt19937_64 rng(1);
    BehaviorParams p;
    p.p_active_random = 1.0;
    p.p_active_chartist = 0.0;
    const auto r = make_trader(Strategy::Random, 1, 1);
    const auto c = make_trader(Strategy::Chartist, 1, 1);
    for (int i = 0; i < 1000; ++i) {
        EXPECT_TRUE(is_active(r, p, rng));
        EXPECT_FALSE(is_active(c, p, rng));
    }
}

TEST(Activation, RandomTraderRate) {
    std::mt19937_64 rng(2);
    const BehaviorParams p;
    const auto r = make_trader(Strategy::Random, 1, 1);
    int hits = 0;
    for (int i = 0; i < 10'000; ++i) hits += is_active(r, p, rng);
    EXPECT_NEAR(hits / 10'000.0, 0.10, 0.01);
}

TEST(Beta, LognormalMomentsBeforeClamp) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z(0, 1);
    const LognormalMoments m{0.25, 0.2};
    const BehaviorParams p;
    double raw = 0, clamped = 0;
    const int n = 100'000;
    for (int i = 0; i < n; ++i) {
        const double zi = z(rng);
        raw += m.from_standard_normal(zi);
        clamped += beta_from_normal(zi, p);
    }
    raw /= n;
    clamped /= n;
    EXPECT_NEAR(raw, 0.25, 0.01);
    EXPECT_LE(clamped, raw);
    EXPECT_LT(raw - clamped, 0.01);
}

TEST(Beta, AlwaysInUnitInterval) {
    std::mt19937_64 rng(4);
    const BehaviorParams p;
    for (int i = 0; i < 100'000; ++i) {
        const double b = draw_beta(p, rng);
        EXPECT_GT(b, 0.0);
        EXPECT_LE(b, 1.0);
    }
    EXPECT_EQ(beta_from_normal(50.0, p), 1.0);
}

TEST(Beta, MedianAtZeroDraw) {
    EXPECT_NEAR(beta_from_normal(0.0, BehaviorParams{}), 0.1952172023607576, 1e-12);
}

TEST(ChartistSignal, Rules) {
    const std::vector<double> up{100, 101, 102};
    const std::vector<double> flat{100, 100, 100};
    const std::vector<double> down{100, 99, 98.5};
    EXPECT_EQ(chartist_signal(up, 2, 0.01), Signal::Buy);
    EXPECT_EQ(chartist_signal(flat, 2, 0.01), Signal::None);
    EXPECT_EQ(chartist_signal(down, 2, 0.01), Signal::Sell);
    EXPECT_EQ(chartist_signal(up, 5, 0.01), Signal::None);  // history too short
    const std::vector<double> small{100, 100.5};
    EXPECT_EQ(chartist_signal(small, 1, 0.01), Signal::None);
}

TEST(ChartistSignal, ScaleInvariant) {
    std::mt19937_64 rng(5);
    std::lognormal_distribution<double> step(0.0, 0.03);
    std::uniform_real_distribution<double> k(0.01, 1000.0);
    for (int rep = 0; rep < 500; ++rep) {
        std::vector<double> p{10.0};
        for (int t = 0; t < 20; ++t) p.push_back(p.back() * step(rng));
        const double f = k(rng);
        std::vector<double> q;
        for (double x : p) q.push_back(x * f);
        for (int w = 1; w <= 15; ++w)
            EXPECT_EQ(chartist_signal(p, w, 0.01), chartist_signal(q, w, 0.01));
    }
}

TEST(SigmaI, Cases) {
    const std::vector<double> constant(12, 50.0);
    EXPECT_EQ(sigma_i(constant, 0.01, 10), 0.0);
    const std::vector<double> one{5.0};
    EXPECT_EQ(sigma_i(one, 0.01, 10), 0.0);
    // |returns| = 0.1, 0.1, 0.3
    const std::vector<double> p{100, 110, 99, 128.7};
    EXPECT_NEAR(sigma_i(p, 0.01, 10), 0.0011547005383792516, 1e-12);
    // only the last T returns count
    const std::vector<double> q{1, 1000, 100, 110, 99, 128.7};
    EXPECT_NEAR(sigma_i(q, 0.01, 3), 0.0011547005383792516, 1e-12);
}

TEST(BuyOrder, MarketOrderAmount) {
    const auto o = buy_order_from_draws(1000, 5, 0.25, std::nullopt, 0, 3);
    ASSERT_TRUE(o);
    EXPECT_DOUBLE_EQ(o->amount, 50.0);
    EXPECT_EQ(o->limit_price, 0.0);
    EXPECT_TRUE(o->is_market());
    EXPECT_EQ(o->side, Side::Buy);
}

TEST(BuyOrder, NoCashNoOrder) {
    EXPECT_FALSE(buy_order_from_draws(0, 5, 0.25, std::nullopt, 0, 3));
}

TEST(BuyOrder, DegenerateLimit) {
    std::mt19937_64 rng(6);
    const double m = draw_limit_multiplier(1.02, 0.0, rng);
    const auto o = buy_order_from_draws(1000, 100, 0.25, m, 0, 3);
    ASSERT_TRUE(o);
    EXPECT_EQ(o->limit_price, 1.02 * 100);
}

TEST(BuyOrder, LimitCostNeverExceedsCash) {
    const auto o = buy_order_from_draws(1000, 10, 1.0, 1.5, 0, 3);
    ASSERT_TRUE(o);
    EXPECT_LE(o->amount * o->limit_price, 1000 * (1 + 1e-12));
}

TEST(SellOrder, Cases) {
    const auto o = sell_order_from_draws(8, 100, 0.25, std::nullopt, 0, 3);
    ASSERT_TRUE(o);
    EXPECT_DOUBLE_EQ(o->amount, 2.0);
    EXPECT_FALSE(sell_order_from_draws(0, 100, 0.25, std::nullopt, 0, 3));
    const auto l = sell_order_from_draws(8, 102, 0.25, 1.02, 0, 3);
    ASSERT_TRUE(l);
    EXPECT_DOUBLE_EQ(l->limit_price, 100.0);
}

TEST(Expiry, ChartistSameDay) {
    std::mt19937_64 rng(7);
    EXPECT_EQ(make_expiry(Strategy::Chartist, 10, BehaviorParams{}, rng), 10);
}

TEST(Expiry, RandomMeanOffset) {
    std::mt19937_64 rng(8);
    const BehaviorParams p;
    double s = 0;
    const int n = 100'000;
    for (int i = 0; i < n; ++i) s += static_cast<double>(make_expiry(Strategy::Random, 0, p, rng));
    EXPECT_NEAR(s / n, 3.0, 0.1);
}

TEST(Expiry, AtLeastOneDayAhead) {
    EXPECT_EQ(expiry_offset_from_normal(-10.0, BehaviorParams{}), 1);
}

TEST(DecideOrder, RandomSidesAreBalanced) {
    std::mt19937_64 rng(9);
    const BehaviorParams p;
    const auto t = make_trader(Strategy::Random, 1000, 100);
    const std::vector<double> closes{5.0};
    int buys = 0, total = 0;
    for (int i = 0; i < 10'000; ++i) {
        const auto o = decide_order(t, closes, 5.0, p, rng, 0);
        ASSERT_TRUE(o);
        ++total;
        buys += o->side == Side::Buy;
    }
    EXPECT_NEAR(static_cast<double>(buys) / total, 0.5, 0.02);
}

TEST(DecideOrder, ChartistFollowsSignal) {
    std::mt19937_64 rng(10);
    const BehaviorParams p;
    const auto t = make_trader(Strategy::Chartist, 1000, 100, 2);
    const std::vector<double> up{100, 101, 102};
    const std::vector<double> flat{100, 100, 100};
    for (int i = 0; i < 100; ++i) {
        const auto o = decide_order(t, up, 102, p, rng, 4);
        ASSERT_TRUE(o);
        EXPECT_EQ(o->side, Side::Buy);
        EXPECT_EQ(o->expiry_day, 4);
        EXPECT_FALSE(decide_order(t, flat, 100, p, rng, 4));
    }
}

TEST(DecideOrder, AmountsWithinAvailableResources) {
    std::mt19937_64 rng(11);
    BehaviorParams p;
    p.K = 0.5;  // wide limit dispersion
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> closes{5.0};
    for (int t = 0; t < 30; ++t) closes.push_back(closes.back() * (0.8 + 0.4 * u(rng)));
    for (int i = 0; i < 20'000; ++i) {
        auto t = make_trader(i % 3 ? Strategy::Random : Strategy::Chartist, 1000 * u(rng), 50 * u(rng),
                             2 + i % 10);
        t.committed_cash = t.cash * u(rng);
        t.committed_coins = t.coins * u(rng);
        const double price = closes.back();
        const auto o = decide_order(t, closes, price, p, rng, 0);
        if (!o) continue;
        EXPECT_GT(o->amount, 0.0);
        EXPECT_GE(o->expiry_day, o->issue_day);
        if (o->side == Side::Sell) {
            EXPECT_LE(o->amount, t.available_coins() * (1 + 1e-12));
        } else {
            const double ref = o->is_market() ? price : o->limit_price;
            EXPECT_LE(o->amount * ref, t.available_cash() * (1 + 1e-12));
        }
    }
}

TEST(BehaviorParams, Validation) {
    BehaviorParams p;
    EXPECT_NO_THROW(p.validate());
    p.p_active_random = 1.5;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = BehaviorParams{};
    p.K = 0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
}

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "cmsim/stats.hpp"

using namespace cmsim;
using namespace cmsim::stats;

namespace {

// deterministic test series; reference values below were computed for these
// exact inputs with an independent implementation (statsmodels adfuller/acf)
std::vector<double> wiggly_walk() {
    std::vector<double> x;
    double acc = 0.0;
    for (int t = 0; t < 200; ++t) {
        const double td = t;
        acc += std::sin(0.7 * td * td + 0.3);
        x.push_back(100.0 + acc + 0.5 * std::cos(1.3 * td));
    }
    return x;
}

std::vector<double> random_walk(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> z(0, 1);
    std::vector<double> p{100.0};
    for (std::size_t t = 1; t < n; ++t) p.push_back(p.back() + z(rng));
    return p;
}

std::vector<double> pareto(std::mt19937_64& rng, std::size_t n, double alpha) {
    // P(X >= x) = x^-(alpha - 1), x >= 1
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> x;
    for (std::size_t i = 0; i < n; ++i) x.push_back(std::pow(1.0 - u(rng), -1.0 / (alpha - 1.0)));
    return x;
}

}  // namespace

TEST(Returns, Examples) {
    EXPECT_NEAR(returns(std::vector<double>{100, 110}).raw.at(0), 0.10, 1e-15);
    const auto r = returns(std::vector<double>{100, 90, 99});
    EXPECT_NEAR(r.raw[0], -0.10, 1e-15);
    EXPECT_NEAR(r.raw[1], 0.10, 1e-15);
    EXPECT_NEAR(r.abs[0], 0.10, 1e-15);
    for (double x : returns(std::vector<double>(10, 3.0)).raw) EXPECT_EQ(x, 0.0);
}

TEST(Returns, Errors) {
    EXPECT_THROW(returns(std::vector<double>{1.0}), std::invalid_argument);
    EXPECT_THROW(returns(std::vector<double>{1.0, 0.0}), std::invalid_argument);
}

TEST(Acf, ReferenceValues) {
    std::vector<double> y;
    for (int t = 0; t < 200; ++t) y.push_back(std::sin(0.37 * t) + 0.1 * std::cos(2.1 * t * t));
    const auto rho = acf(y, 3);
    EXPECT_EQ(rho[0], 1.0);
    EXPECT_NEAR(rho[1], 0.9168724605987724, 1e-12);
    EXPECT_NEAR(rho[2], 0.7227550733441428, 1e-12);
    EXPECT_NEAR(rho[3], 0.43569655476292246, 1e-12);
}

TEST(Acf, Alternating) {
    std::vector<double> x;
    for (int i = 0; i < 1000; ++i) x.push_back(i % 2 ? -1.0 : 1.0);
    EXPECT_NEAR(acf(x, 1)[1], -1.0, 1e-2);
}

TEST(Acf, IidNoiseIsUncorrelated) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> z(0, 1);
    std::vector<double> x(10'000);
    for (auto& v : x) v = z(rng);
    const auto rho = acf(x, 20);
    for (std::size_t k = 1; k <= 20; ++k) EXPECT_LT(std::abs(rho[k]), 0.05) << k;
}

TEST(Acf, AffineInvariant) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> z(0, 1);
    std::vector<double> x(300);
    double prev = 0;
    for (auto& v : x) v = prev = 0.6 * prev + z(rng);
    std::vector<double> y;
    for (double v : x) y.push_back(3.5 * v - 12.0);
    const auto a = acf(x, 10), b = acf(y, 10);
    for (std::size_t k = 0; k <= 10; ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
}

TEST(Acf, Errors) {
    EXPECT_THROW(acf(std::vector<double>(10, 1.0), 3), std::domain_error);
    EXPECT_THROW(acf(std::vector<double>{1, 2, 3}, 2), std::invalid_argument);
}

TEST(Ccdf, Examples) {
    const auto c = ccdf(std::vector<double>{1, 2, 3});
    ASSERT_EQ(c.size(), 3u);
    EXPECT_EQ(c[0].p, 1.0);
    EXPECT_NEAR(c[2].p, 1.0 / 3.0, 1e-15);
    const auto flat = ccdf(std::vector<double>{4, 4, 4});
    ASSERT_EQ(flat.size(), 1u);
    EXPECT_EQ(flat[0].p, 1.0);
    EXPECT_THROW(ccdf(std::vector<double>{}), std::invalid_argument);
}

TEST(Ccdf, NonIncreasingFromOne) {
    std::mt19937_64 rng(3);
    const auto c = ccdf(pareto(rng, 5000, 3.0));
    EXPECT_EQ(c.front().p, 1.0);
    for (std::size_t i = 1; i < c.size(); ++i) {
        EXPECT_LT(c[i].p, c[i - 1].p);
        EXPECT_GT(c[i].x, c[i - 1].x);
    }
}

TEST(Ccdf, ParetoSlope) {
    std::mt19937_64 rng(4);
    const auto c = ccdf(pareto(rng, 10'000, 2.0));
    EXPECT_NEAR(tail_fit(c, 1.0).slope, -1.0, 0.1);
}

TEST(TailFit, ExactPowerLaw) {
    std::vector<CcdfPoint> pts;
    for (int i = 0; i < 40; ++i) {
        const double x = std::pow(10.0, -2.0 + 0.1 * i);
        pts.push_back({x, std::pow(x, -1.5)});
    }
    const auto fit = tail_fit(pts, 1e-2);
    EXPECT_NEAR(fit.slope, -1.5, 1e-12);
    EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
    EXPECT_EQ(fit.n_tail, 40u);
    EXPECT_EQ(tail_fit(pts, 1.0).n_tail, 20u);
}

TEST(TailFit, ParetoAboveQuantile) {
    std::mt19937_64 rng(5);
    const auto x = pareto(rng, 10'000, 2.0);
    const auto fit = tail_fit(ccdf(x), quantile(x, 0.1));
    EXPECT_NEAR(fit.slope, -1.0, 0.15);
}

TEST(TailFit, TooFewPoints) {
    std::vector<CcdfPoint> pts;
    for (int i = 1; i <= 5; ++i) pts.push_back({static_cast<double>(i), 1.0 / i});
    try {
        tail_fit(pts, 0.5);
        FAIL() << "expected TailFitError";
    } catch (const TailFitError& e) {
        EXPECT_EQ(e.n_tail(), 5u);
    }
}

TEST(Quantile, Interpolates) {
    const std::vector<double> v{4, 1, 3, 2};
    EXPECT_EQ(quantile(v, 0.0), 1.0);
    EXPECT_EQ(quantile(v, 1.0), 4.0);
    EXPECT_DOUBLE_EQ(quantile(v, 0.5), 2.5);
}

TEST(Ols, ExactFitAndInverseDiagonal) {
    // X = [1 0; 1 1; 1 2], (X'X)^-1 diagonal = 5/6, 1/2
    const auto fit = ols({1, 0, 1, 1, 1, 2}, {1, 3, 5}, 2);
    EXPECT_NEAR(fit.beta[0], 1.0, 1e-12);
    EXPECT_NEAR(fit.beta[1], 2.0, 1e-12);
    EXPECT_NEAR(fit.rss, 0.0, 1e-20);
    EXPECT_NEAR(fit.xtx_inv_diag[0], 5.0 / 6.0, 1e-12);
    EXPECT_NEAR(fit.xtx_inv_diag[1], 0.5, 1e-12);
}

TEST(Ols, SingularDesign) {
    EXPECT_THROW(ols({1, 2, 1, 2, 1, 2}, {1, 2, 3}, 2), SingularRegression);
}

TEST(Adf, ReferenceStatistics) {
    const auto x = wiggly_walk();
    EXPECT_NEAR(adf_tau3(x, 0).tau3, -2.825445627364134, 1e-8);
    EXPECT_NEAR(adf_tau3(x, 2).tau3, -2.606475984794583, 1e-8);
    EXPECT_NEAR(adf_tau3(x, 5).tau3, -3.24573905369644, 1e-8);
    const auto r = adf_tau3(x, 2);
    EXPECT_EQ(r.lags, 2u);
    EXPECT_EQ(r.nobs, 197u);
    EXPECT_LT(r.critical_1, r.critical_5);
    EXPECT_LT(r.critical_5, r.critical_10);
}

TEST(Adf, DefaultLagRule) {
    EXPECT_EQ(default_adf_lags(830), 9u);
    EXPECT_EQ(default_adf_lags(28), 3u);
    EXPECT_EQ(default_adf_lags(9), 2u);
    EXPECT_EQ(adf_tau3(wiggly_walk()).lags, default_adf_lags(200));
}

TEST(Adf, ScaleInvariant) {
    const auto x = wiggly_walk();
    std::vector<double> y;
    for (double v : x) y.push_back(v * 37.5);
    EXPECT_NEAR(adf_tau3(x).tau3, adf_tau3(y).tau3, 1e-9);
}

TEST(Adf, RejectsStationaryAutoregression) {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> z(0, 1);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> p;
        double v = 0;
        for (int t = 0; t < 830; ++t) p.push_back(v = 0.2 * v + z(rng));
        EXPECT_LT(adf_tau3(p).tau3, -3.96);
    }
}

TEST(Adf, RandomWalkUsuallyNotRejected) {
    std::mt19937_64 rng(7);
    int kept = 0;
    for (int rep = 0; rep < 200; ++rep) kept += adf_tau3(random_walk(rng, 830)).tau3 > -3.41;
    EXPECT_GE(kept, 180);
}

TEST(Adf, Errors) {
    EXPECT_THROW(adf_tau3(std::vector<double>(20, 1.0), 0), std::invalid_argument);
    EXPECT_THROW(adf_tau3(std::vector<double>(40, 1.0), 0), SingularRegression);
}

TEST(McAggregate, Examples) {
    const std::vector<double> a{1, 2, 3};
    const auto same = mc_aggregate({a, a});
    for (double s : same.stddev) EXPECT_EQ(s, 0.0);
    const auto two = mc_aggregate({{2.0}, {4.0}});
    EXPECT_EQ(two.mean[0], 3.0);
    EXPECT_NEAR(two.stddev[0], std::sqrt(2.0), 1e-15);
    EXPECT_THROW(mc_aggregate({a}), std::invalid_argument);
    EXPECT_THROW(mc_aggregate({a, {1.0}}), std::invalid_argument);
}

TEST(Analyze, ReportAndCsv) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> z(0, 0.05);
    std::vector<double> p{100.0};
    for (int t = 0; t < 830; ++t) p.push_back(p.back() * std::exp(z(rng)));
    AnalysisParams params;
    params.tail_quantile = 0.9;
    const auto rep = analyze(p, params);
    EXPECT_EQ(rep.acf_raw.size(), 51u);
    ASSERT_TRUE(rep.tail.has_value());
    EXPECT_NEAR(rep.x_min, quantile(returns(p).abs, 0.9), 1e-15);
    EXPECT_GE(rep.n_tail, 10u);
    std::ostringstream acf_out, sum_out, ccdf_out;
    write_acf_csv(acf_out, rep);
    write_summary_csv(sum_out, rep);
    write_ccdf_csv(ccdf_out, rep);
    EXPECT_EQ(acf_out.str().substr(0, 18), "lag,rho_raw,rho_ab");
    EXPECT_EQ(sum_out.str().substr(0, sum_out.str().find('\n')), "tau3,lags,slope,r2,xmin,n_tail");
    EXPECT_EQ(ccdf_out.str().substr(0, 4), "x,p\n");
}

TEST(Analyze, SmallReturnsLeaveNoTailAboveDefaultCutoff) {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> z(0, 0.01);
    std::vector<double> p{100.0};
    for (int t = 1; t < 100; ++t) p.push_back(p.back() * std::exp(z(rng)));
    const auto rep = analyze(p, AnalysisParams{});
    EXPECT_FALSE(rep.tail.has_value());
    EXPECT_EQ(rep.n_tail, 0u);
}

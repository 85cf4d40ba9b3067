#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cmsim {

using TraderId = std::uint64_t;
using Day = std::int64_t;

enum class Strategy { Random, Chartist };

inline const char* to_string(Strategy s) noexcept {
    return s == Strategy::Random ? "random" : "chartist";
}

enum class Side { Buy, Sell };

struct Trader {
    TraderId id = 0;
    Strategy strategy = Strategy::Random;
    double cash = 0.0;
    double coins = 0.0;
    double committed_cash = 0.0;   // reserved by resting buy orders
    double committed_coins = 0.0;  // reserved by resting sell orders
    int chartist_window = 0;       // tau_i, Chartists only

    [[nodiscard]] double available_cash() const noexcept {
        return std::max(0.0, cash - committed_cash);
    }
    [[nodiscard]] double available_coins() const noexcept {
        return std::max(0.0, coins - committed_coins);
    }
};

/// What a trader wants to submit; the engine turns it into a book order.
struct OrderIntent {
    Side side = Side::Buy;
    double amount = 0.0;       // coins
    double limit_price = 0.0;  // 0 marks a market order
    Day issue_day = 0;
    Day expiry_day = 0;

    [[nodiscard]] bool is_market() const noexcept { return limit_price == 0.0; }
};

/// Lognormal variate parameterized by the mean and standard deviation of the
/// variate itself (not of its logarithm).
struct LognormalMoments {
    double mean = 1.0;
    double stddev = 0.0;

    [[nodiscard]] double log_variance() const {
        const double cv = stddev / mean;
        return std::log1p(cv * cv);
    }
    [[nodiscard]] double log_mean() const { return std::log(mean) - 0.5 * log_variance(); }
    [[nodiscard]] double log_stddev() const { return std::sqrt(log_variance()); }

    /// Maps a standard normal draw onto the variate.
    [[nodiscard]] double from_standard_normal(double z) const {
        return std::exp(log_mean() + log_stddev() * z);
    }
};

struct BehaviorParams {
    double p_active_random = 0.1;
    double p_active_chartist = 0.5;
    double p_market_random = 0.2;
    double p_market_chartist = 0.7;
    double mu = 1.02;
    double K = 0.01;
    std::size_t T_window = 10;
    double beta_mean = 0.25;
    double beta_std = 0.2;
    double threshold = 0.01;
    double expiry_mean = 3.0;
    double expiry_std = 1.0;
    int chartist_window_min = 2;
    int chartist_window_max = 15;

    [[nodiscard]] double p_active(Strategy s) const noexcept {
        return s == Strategy::Random ? p_active_random : p_active_chartist;
    }
    [[nodiscard]] double p_market(Strategy s) const noexcept {
        return s == Strategy::Random ? p_market_random : p_market_chartist;
    }

    void validate() const {
        auto prob = [](double p, const char* name) {
            if (!(p >= 0.0 && p <= 1.0))
                throw std::invalid_argument(std::string(name) + " must lie in [0,1]");
        };
        prob(p_active_random, "p_active_random");
        prob(p_active_chartist, "p_active_chartist");
        prob(p_market_random, "p_market_random");
        prob(p_market_chartist, "p_market_chartist");
        if (!(mu > 0)) throw std::invalid_argument("mu must be > 0");
        if (!(K > 0)) throw std::invalid_argument("K must be > 0");
        if (!(threshold > 0)) throw std::invalid_argument("threshold must be > 0");
        if (T_window < 1) throw std::invalid_argument("T_window must be >= 1");
        if (!(beta_mean > 0) || !(beta_std >= 0))
            throw std::invalid_argument("beta moments must be positive");
        if (!(expiry_mean > 0) || !(expiry_std >= 0))
            throw std::invalid_argument("expiry moments must be positive");
        if (chartist_window_min < 1 || chartist_window_max < chartist_window_min)
            throw std::invalid_argument("chartist window range is invalid");
    }
};

template <class Rng>
bool is_active(const Trader& trader, const BehaviorParams& params, Rng& rng) {
    std::bernoulli_distribution active(params.p_active(trader.strategy));
    return active(rng);
}

/// Fraction of available resources placed in one order, clamped to 1.
inline double beta_from_normal(double z, const BehaviorParams& params) {
    const LognormalMoments m{params.beta_mean, params.beta_std};
    return std::min(1.0, m.from_standard_normal(z));
}

template <class Rng>
double draw_beta(const BehaviorParams& params, Rng& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    return beta_from_normal(z(rng), params);
}

enum class Signal { None, Buy, Sell };

/// Trend rule over closes. Scale-invariant: only the relative variation over
/// the trader's window matters.
inline Signal chartist_signal(std::span<const double> closes, int window, double threshold) {
    if (window < 1 || closes.size() < static_cast<std::size_t>(window) + 1) return Signal::None;
    const double now = closes[closes.size() - 1];
    const double then = closes[closes.size() - 1 - static_cast<std::size_t>(window)];
    const double v = (now - then) / then;
    if (v > threshold) return Signal::Buy;
    if (v < -threshold) return Signal::Sell;
    return Signal::None;
}

/// K times the sample standard deviation of absolute returns over the last
/// `window` returns of `closes`.
inline double sigma_i(std::span<const double> closes, double K, std::size_t window) {
    if (closes.size() < 3) return 0.0;
    const std::size_t n_returns = std::min(window, closes.size() - 1);
    if (n_returns < 2) return 0.0;
    std::vector<double> abs_r;
    abs_r.reserve(n_returns);
    for (std::size_t s = closes.size() - n_returns; s < closes.size(); ++s)
        abs_r.push_back(std::abs((closes[s] - closes[s - 1]) / closes[s - 1]));
    double mean = 0.0;
    for (double x : abs_r) mean += x;
    mean /= static_cast<double>(abs_r.size());
    double ss = 0.0;
    for (double x : abs_r) ss += (x - mean) * (x - mean);
    return K * std::sqrt(ss / static_cast<double>(abs_r.size() - 1));
}

/// Expiry offset for Random traders from a standard normal draw: rounded
/// lognormal days, at least one day ahead.
inline Day expiry_offset_from_normal(double z, const BehaviorParams& params) {
    const LognormalMoments m{params.expiry_mean, params.expiry_std};
    return std::max<Day>(1, std::llround(m.from_standard_normal(z)));
}

template <class Rng>
Day make_expiry(Strategy strategy, Day day, const BehaviorParams& params, Rng& rng) {
    if (strategy == Strategy::Chartist) return day;
    std::normal_distribution<double> z(0.0, 1.0);
    return day + expiry_offset_from_normal(z(rng), params);
}

/// Positive draw from N(mu, sigma); non-positive draws are redrawn.
template <class Rng>
double draw_limit_multiplier(double mu, double sigma, Rng& rng) {
    if (!(sigma > 0)) return mu;
    std::normal_distribution<double> n(mu, sigma);
    for (;;) {
        const double m = n(rng);
        if (m > 0) return m;
    }
}

/// Buy order from already-drawn randomness. `multiplier` empty means a market
/// order. Amount is the cash to spend over the price.
inline std::optional<OrderIntent> buy_order_from_draws(double available_cash, double price,
                                                       double beta,
                                                       std::optional<double> multiplier, Day day,
                                                       Day expiry) {
    if (!(available_cash > 0) || !(price > 0)) return std::nullopt;
    OrderIntent o;
    o.side = Side::Buy;
    o.amount = available_cash * beta / price;
    o.limit_price = multiplier ? price * *multiplier : 0.0;
    // A limit buy may not reserve more cash than is available.
    if (o.limit_price > 0 && o.amount * o.limit_price > available_cash)
        o.amount = available_cash / o.limit_price;
    o.issue_day = day;
    o.expiry_day = expiry;
    if (!(o.amount > 0)) return std::nullopt;
    return o;
}

inline std::optional<OrderIntent> sell_order_from_draws(double available_coins, double price,
                                                        double beta,
                                                        std::optional<double> multiplier, Day day,
                                                        Day expiry) {
    if (!(available_coins > 0)) return std::nullopt;
    OrderIntent o;
    o.side = Side::Sell;
    o.amount = std::min(available_coins, available_coins * beta);
    o.limit_price = multiplier ? price / *multiplier : 0.0;
    o.issue_day = day;
    o.expiry_day = expiry;
    if (!(o.amount > 0)) return std::nullopt;
    return o;
}

template <class Rng>
std::optional<double> draw_limit(Strategy strategy, double sigma, const BehaviorParams& params,
                                 Rng& rng) {
    std::bernoulli_distribution market(params.p_market(strategy));
    if (market(rng)) return std::nullopt;
    return draw_limit_multiplier(params.mu, sigma, rng);
}

template <class Rng>
std::optional<OrderIntent> make_buy_order(const Trader& trader, double price, double sigma,
                                          const BehaviorParams& params, Rng& rng, Day day) {
    if (!(trader.available_cash() > 0)) return std::nullopt;
    const double beta = draw_beta(params, rng);
    const auto multiplier = draw_limit(trader.strategy, sigma, params, rng);
    const Day expiry = make_expiry(trader.strategy, day, params, rng);
    return buy_order_from_draws(trader.available_cash(), price, beta, multiplier, day, expiry);
}

template <class Rng>
std::optional<OrderIntent> make_sell_order(const Trader& trader, double price, double sigma,
                                           const BehaviorParams& params, Rng& rng, Day day) {
    if (!(trader.available_coins() > 0)) return std::nullopt;
    const double beta = draw_beta(params, rng);
    const auto multiplier = draw_limit(trader.strategy, sigma, params, rng);
    const Day expiry = make_expiry(trader.strategy, day, params, rng);
    return sell_order_from_draws(trader.available_coins(), price, beta, multiplier, day, expiry);
}

/// One active trader's decision for the day. `closes` holds completed days only.
template <class Rng>
std::optional<OrderIntent> decide_order(const Trader& trader, std::span<const double> closes,
                                        double price, const BehaviorParams& params, Rng& rng,
                                        Day day) {
    Side side;
    if (trader.strategy == Strategy::Random) {
        std::bernoulli_distribution coin(0.5);
        side = coin(rng) ? Side::Buy : Side::Sell;
    } else {
        const Signal s = chartist_signal(closes, trader.chartist_window, params.threshold);
        if (s == Signal::None) return std::nullopt;
        side = s == Signal::Buy ? Side::Buy : Side::Sell;
    }
    const double sigma = sigma_i(closes, params.K, params.T_window);
    return side == Side::Buy ? make_buy_order(trader, price, sigma, params, rng, day)
                             : make_sell_order(trader, price, sigma, params, rng, day);
}

}  // namespace cmsim

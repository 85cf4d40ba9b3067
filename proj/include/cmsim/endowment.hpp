#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <vector>

namespace cmsim {

/// Ranked power law: the agent of rank i holds top_value * i^-alpha.
struct WealthProfile {
    double alpha = 1.0;
    double top_value = 1.0;
    std::size_t count = 1;

    [[nodiscard]] double at_rank(std::size_t rank) const {
        return top_value * std::pow(static_cast<double>(rank), -alpha);
    }
};

/// Per-agent cash (USD) and coins, index-aligned.
struct EndowmentSet {
    std::vector<double> cash;
    std::vector<double> coins;
};

/// Generalized harmonic number H(n, alpha) = sum_{i=1..n} i^-alpha, summed from
/// the smallest term upward.
inline double generalized_harmonic(std::size_t n, double alpha) {
    double sum = 0.0;
    for (std::size_t i = n; i >= 1; --i) sum += std::pow(static_cast<double>(i), -alpha);
    return sum;
}

/// Ranked values whose exact sum equals `total`; returned in rank order.
inline std::vector<double> zipf_ranked(double total, std::size_t count, double alpha) {
    if (!(total > 0)) throw std::invalid_argument("zipf_ranked: total must be > 0");
    if (count == 0) throw std::invalid_argument("zipf_ranked: count must be >= 1");
    if (!(alpha > 0)) throw std::invalid_argument("zipf_ranked: alpha must be > 0");
    const WealthProfile profile{alpha, total / generalized_harmonic(count, alpha), count};
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = profile.at_rank(i + 1);
    return out;
}

/// Ranked values with a fixed rank-1 value; the total is whatever the law gives.
inline std::vector<double> zipf_ranked_from_top(double top_value, std::size_t count, double alpha) {
    if (!(top_value > 0)) throw std::invalid_argument("zipf_ranked_from_top: top must be > 0");
    if (!(alpha > 0)) throw std::invalid_argument("zipf_ranked_from_top: alpha must be > 0");
    const WealthProfile profile{alpha, top_value, count};
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = profile.at_rank(i + 1);
    return out;
}

struct EndowmentParams {
    std::size_t initial_traders = 100;
    std::size_t final_traders = 1500;
    double total_coins = 80'000.0;
    double total_cash = 400'000.0;
    double initial_alpha = 1.0;
    double entrant_top_cash = 400'000.0;
    double entrant_alpha = 0.6;
};

/// Historic traders: coins and cash each follow the ranked law with exact totals.
/// Coin ranks and cash ranks are shuffled independently across trader slots.
template <class Rng>
EndowmentSet initial_population(const EndowmentParams& p, Rng& rng) {
    EndowmentSet set;
    set.coins = zipf_ranked(p.total_coins, p.initial_traders, p.initial_alpha);
    set.cash = zipf_ranked(p.total_cash, p.initial_traders, p.initial_alpha);
    std::shuffle(set.coins.begin(), set.coins.end(), rng);
    std::shuffle(set.cash.begin(), set.cash.end(), rng);
    return set;
}

/// Cash-only pool of traders who join later. The returned vectors are in
/// randomized order; sort descending to recover the ranks.
template <class Rng>
EndowmentSet entrant_pool(const EndowmentParams& p, Rng& rng) {
    if (p.final_traders < p.initial_traders)
        throw std::invalid_argument("entrant_pool: final trader count below initial count");
    EndowmentSet set;
    set.cash = zipf_ranked_from_top(p.entrant_top_cash, p.final_traders - p.initial_traders,
                                    p.entrant_alpha);
    set.coins.assign(set.cash.size(), 0.0);
    std::shuffle(set.cash.begin(), set.cash.end(), rng);
    return set;
}

}  // namespace cmsim

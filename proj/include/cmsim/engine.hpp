#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmsim/agents.hpp"
#include "cmsim/data_ingest.hpp"
#include "cmsim/endowment.hpp"
#include "cmsim/orderbook.hpp"

namespace cmsim {

using Rng = std::mt19937_64;

struct MarketParams {
    BehaviorParams behavior;
    EndowmentParams endowment;
    double initial_price = 5.0;
    double p_random = 0.7;  // share of Random traders; the rest are Chartists
};

/// Flows that change the aggregate cash and coin stock during one day.
struct DayLedger {
    double cash_before = 0.0;
    double coins_before = 0.0;
    double cash_entered = 0.0;  // endowments of new traders
    double cash_exited = 0.0;   // cash carried out by removed traders
    double coins_mined = 0.0;
    double coins_exited = 0.0;  // unsold coins leaving with removed traders
    double cash_after = 0.0;
    double coins_after = 0.0;
};

struct DayRecord {
    Day day = 0;
    double close_price = 0.0;
    double volume = 0.0;
    std::size_t trader_count = 0;
    double total_coins = 0.0;
    double random_coins = 0.0;
    double chartist_coins = 0.0;
    double random_cash = 0.0;
    double chartist_cash = 0.0;
    double random_wealth = 0.0;
    double chartist_wealth = 0.0;
    std::size_t entered = 0;
    std::size_t exited = 0;
    DayLedger ledger;
};

struct MarketSeries {
    std::vector<DayRecord> days;

    [[nodiscard]] std::size_t size() const noexcept { return days.size(); }
    [[nodiscard]] std::vector<double> prices() const {
        std::vector<double> out;
        out.reserve(days.size());
        for (const auto& d : days) out.push_back(d.close_price);
        return out;
    }
};

struct RunResult {
    MarketSeries series;
    std::vector<Trade> trades;
};

class PopulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Full state of one simulated market. Single-threaded; one instance per run.
class Market {
public:
    Market(const MarketParams& params, std::uint64_t seed)
        : params_(params), book_(params.initial_price), rng_(dynamics_seed(seed)) {
        params_.behavior.validate();
        if (!(params_.p_random >= 0 && params_.p_random <= 1))
            throw std::invalid_argument("p_random must lie in [0,1]");
        Rng endow_rng(endowment_seed(seed));
        const EndowmentSet initial = initial_population(params_.endowment, endow_rng);
        for (std::size_t i = 0; i < initial.cash.size(); ++i)
            add_trader(initial.cash[i], initial.coins[i], endow_rng);
        pool_ = entrant_pool(params_.endowment, endow_rng).cash;
        closes_.push_back(params_.initial_price);
    }

    /// Advances one day; `target` and `mined` come from the driver schedule.
    DayRecord step(std::int64_t target, double mined) {
        DayRecord rec;
        rec.day = day_;
        rec.ledger.cash_before = total_cash();
        rec.ledger.coins_before = total_coins();
        day_trades_begin_ = trades_.size();

        for (const BookOrder& o : book_.expire(day_)) release(o.order_id);

        adjust_population(target, rec);
        rec.ledger.coins_mined = allocate_mining(mined);

        std::vector<TraderId> active;
        for (const auto& [id, t] : traders_)
            if (is_active(t, params_.behavior, rng_)) active.push_back(id);
        std::shuffle(active.begin(), active.end(), rng_);
        for (TraderId id : active) {
            const Trader& t = traders_.at(id);
            auto intent = decide_order(t, closes_, book_.last_price(), params_.behavior, rng_, day_);
            if (intent && intent->amount >= kCoinQuantum) submit(id, *intent);
        }

        const bool traded = trades_.size() > day_trades_begin_;
        const double close = traded ? trades_.back().price : closes_.back();
        closes_.push_back(close);

        rec.close_price = close;
        for (std::size_t i = day_trades_begin_; i < trades_.size(); ++i)
            rec.volume += trades_[i].amount;
        rec.trader_count = traders_.size();
        for (const auto& [id, t] : traders_) {
            const bool random = t.strategy == Strategy::Random;
            (random ? rec.random_coins : rec.chartist_coins) += t.coins;
            (random ? rec.random_cash : rec.chartist_cash) += t.cash;
            (random ? rec.random_wealth : rec.chartist_wealth) += t.cash + t.coins * close;
        }
        rec.total_coins = rec.random_coins + rec.chartist_coins;
        rec.ledger.cash_after = total_cash();
        rec.ledger.coins_after = rec.total_coins;
        ++day_;
        return rec;
    }

    /// Brings the population to `target`: entrants come from the pool, leavers
    /// dump their coins with a market sell and exit with their cash.
    void adjust_population(std::int64_t target, DayRecord& rec) {
        if (target < 0) throw std::invalid_argument("adjust_population: negative target");
        const auto count = static_cast<std::int64_t>(traders_.size());
        if (target > count) {
            const auto need = static_cast<std::size_t>(target - count);
            if (need > pool_.size())
                throw PopulationError("entrant pool exhausted on day " + std::to_string(day_) +
                                      ": need " + std::to_string(need) + ", have " +
                                      std::to_string(pool_.size()));
            for (std::size_t i = 0; i < need; ++i) {
                const double cash = pool_.back();
                pool_.pop_back();
                add_trader(cash, 0.0, rng_);
                rec.ledger.cash_entered += cash;
                ++rec.entered;
            }
        } else if (target < count) {
            std::vector<TraderId> ids = trader_ids();
            std::vector<TraderId> leaving;
            std::sample(ids.begin(), ids.end(), std::back_inserter(leaving),
                        static_cast<std::size_t>(count - target), rng_);
            for (TraderId id : leaving) {
                const auto [cash, coins] = remove_trader(id);
                rec.ledger.cash_exited += cash;
                rec.ledger.coins_exited += coins;
                ++rec.exited;
            }
        }
    }

    /// Gives `mined` (plus any carry-over) to round(mined) random coin-holding
    /// Random traders, pro-rata to their holdings. Returns coins distributed.
    double allocate_mining(double mined) {
        if (mined < 0) throw std::invalid_argument("allocate_mining: negative amount");
        const double pending = mined + mining_carry_;
        if (!(pending > 0)) return 0.0;

        std::vector<TraderId> eligible;
        for (const auto& [id, t] : traders_)
            if (t.strategy == Strategy::Random && t.coins > 0) eligible.push_back(id);
        const auto wanted = static_cast<std::size_t>(std::llround(pending));
        if (eligible.empty() || wanted == 0) {
            mining_carry_ = pending;
            return 0.0;
        }
        std::vector<TraderId> chosen;
        std::sample(eligible.begin(), eligible.end(), std::back_inserter(chosen),
                    std::min(wanted, eligible.size()), rng_);
        distribute_pro_rata(chosen, pending);
        mining_carry_ = 0.0;
        return pending;
    }

    /// Splits `amount` over `recipients` in proportion to current holdings.
    void distribute_pro_rata(const std::vector<TraderId>& recipients, double amount) {
        double held = 0.0;
        for (TraderId id : recipients) held += traders_.at(id).coins;
        double given = 0.0;
        for (std::size_t i = 0; i < recipients.size(); ++i) {
            Trader& t = traders_.at(recipients[i]);
            const double share =
                i + 1 == recipients.size() ? amount - given : amount * (t.coins / held);
            t.coins += share;
            given += share;
        }
    }

    /// Turns an intent into a book order, commits resources, matches and settles.
    std::vector<Trade> submit(TraderId trader_id, const OrderIntent& intent) {
        Trader& t = traders_.at(trader_id);
        BookOrder o;
        o.order_id = next_order_id_++;
        o.trader_id = trader_id;
        o.side = intent.side;
        o.original_amount = intent.amount;
        o.residual = intent.amount;
        o.limit_price = intent.limit_price;
        o.issue_seq = next_seq_++;
        o.issue_day = day_;
        o.expiry_day = intent.expiry_day;

        Reservation r{trader_id, intent.side, intent.limit_price, 0.0, 0.0};
        if (intent.side == Side::Buy) {
            r.cash = intent.is_market() ? intent.amount * book_.last_price()
                                        : intent.amount * intent.limit_price;
            r.cash = std::min(r.cash, t.available_cash());
            if (intent.is_market()) o.cash_budget = r.cash;
            t.committed_cash += r.cash;
        } else {
            r.coins = std::min(intent.amount, t.available_coins());
            o.residual = o.original_amount = r.coins;
            t.committed_coins += r.coins;
        }
        reservations_.emplace(o.order_id, r);

        const OrderId incoming = o.order_id;
        auto trades = book_.insert(std::move(o));
        std::set<OrderId> touched{incoming};
        for (const Trade& tr : trades) {
            settle(tr);
            touched.insert(tr.buy_order_id);
            touched.insert(tr.sell_order_id);
            trades_.push_back(tr);
        }
        for (OrderId id : touched)
            if (!book_.contains(id)) release(id);
        return trades;
    }

    [[nodiscard]] double total_cash() const {
        double s = 0.0;
        for (const auto& [id, t] : traders_) s += t.cash;
        return s;
    }
    [[nodiscard]] double total_coins() const {
        double s = 0.0;
        for (const auto& [id, t] : traders_) s += t.coins;
        return s;
    }

    /// Checks that commitments equal what resting orders reserve and that no
    /// holding is negative. Returns an empty string when consistent.
    [[nodiscard]] std::string audit(double tol = 1e-6) const {
        std::map<TraderId, std::pair<double, double>> reserved;
        for (const auto& [oid, r] : reservations_) {
            if (!book_.contains(oid)) return "reservation without resting order " + std::to_string(oid);
            reserved[r.trader].first += r.cash;
            reserved[r.trader].second += r.coins;
        }
        for (const auto& [id, t] : traders_) {
            const auto [rc, rb] = reserved.count(id) ? reserved.at(id) : std::pair{0.0, 0.0};
            auto bad = [&](const char* what) {
                return std::string(what) + " for trader " + std::to_string(id);
            };
            if (t.cash < -tol || t.coins < -tol) return bad("negative holding");
            if (t.committed_cash < -tol || t.committed_coins < -tol) return bad("negative commitment");
            if (t.committed_cash > t.cash + tol * std::max(1.0, t.cash)) return bad("cash over-committed");
            if (t.committed_coins > t.coins + tol * std::max(1.0, t.coins)) return bad("coins over-committed");
            if (std::abs(t.committed_cash - rc) > tol * std::max(1.0, rc)) return bad("cash commitment mismatch");
            if (std::abs(t.committed_coins - rb) > tol * std::max(1.0, rb)) return bad("coin commitment mismatch");
        }
        if (book_.crossed()) return "book left crossed";
        return {};
    }

    [[nodiscard]] Day day() const noexcept { return day_; }
    [[nodiscard]] const std::map<TraderId, Trader>& traders() const noexcept { return traders_; }
    [[nodiscard]] const Book& book() const noexcept { return book_; }
    [[nodiscard]] const std::vector<double>& closes() const noexcept { return closes_; }
    [[nodiscard]] const std::vector<Trade>& trades() const noexcept { return trades_; }
    [[nodiscard]] std::size_t pool_size() const noexcept { return pool_.size(); }
    [[nodiscard]] double mining_carry() const noexcept { return mining_carry_; }
    [[nodiscard]] const MarketParams& params() const noexcept { return params_; }

    /// Direct access for scenario tests.
    Trader& trader(TraderId id) { return traders_.at(id); }
    TraderId add_trader(double cash, double coins, Strategy strategy, int window = 0) {
        const TraderId id = next_trader_id_++;
        Trader t;
        t.id = id;
        t.strategy = strategy;
        t.cash = cash;
        t.coins = coins;
        t.chartist_window = window;
        traders_.emplace(id, t);
        return id;
    }

    /// Cancels the trader's orders, market-sells all coins, then removes the
    /// trader. Returns the cash and unsold coins that left the market.
    std::pair<double, double> remove_trader(TraderId id) {
        std::vector<OrderId> own;
        for (const auto& [oid, r] : reservations_)
            if (r.trader == id) own.push_back(oid);
        for (OrderId oid : own) {
            book_.cancel(oid);
            release(oid);
        }
        Trader& t = traders_.at(id);
        if (t.coins >= kCoinQuantum) {
            OrderIntent dump{Side::Sell, t.coins, 0.0, day_, day_};
            const OrderId oid = next_order_id_;
            submit(id, dump);
            if (book_.cancel(oid)) release(oid);
        }
        const Trader gone = traders_.at(id);
        traders_.erase(id);
        return {gone.cash, gone.coins};
    }

private:
    struct Reservation {
        TraderId trader;
        Side side;
        double limit_price;
        double cash;   // remaining cash reserved by a buy
        double coins;  // remaining coins reserved by a sell
    };

    static std::uint64_t derive_seed(std::uint64_t seed, std::uint32_t stream) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          stream};
        std::array<std::uint32_t, 2> words{};
        seq.generate(words.begin(), words.end());
        return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
    }
    static std::uint64_t endowment_seed(std::uint64_t seed) { return derive_seed(seed, 1); }
    static std::uint64_t dynamics_seed(std::uint64_t seed) { return derive_seed(seed, 2); }

    void add_trader(double cash, double coins, Rng& rng) {
        std::bernoulli_distribution random(params_.p_random);
        const Strategy s = random(rng) ? Strategy::Random : Strategy::Chartist;
        int window = 0;
        if (s == Strategy::Chartist) {
            std::uniform_int_distribution<int> w(params_.behavior.chartist_window_min,
                                                 params_.behavior.chartist_window_max);
            window = w(rng);
        }
        add_trader(cash, coins, s, window);
    }

    std::vector<TraderId> trader_ids() const {
        std::vector<TraderId> ids;
        ids.reserve(traders_.size());
        for (const auto& [id, t] : traders_) ids.push_back(id);
        return ids;
    }

    void settle(const Trade& tr) {
        Trader& buyer = traders_.at(tr.buy_trader);
        Trader& seller = traders_.at(tr.sell_trader);
        const double notional = tr.amount * tr.price;

        Reservation& rb = reservations_.at(tr.buy_order_id);
        const double cash_release =
            std::min(rb.cash, rb.limit_price > 0 ? tr.amount * rb.limit_price : notional);
        rb.cash -= cash_release;
        buyer.committed_cash = std::max(0.0, buyer.committed_cash - cash_release);
        buyer.cash -= notional;
        buyer.coins += tr.amount;

        Reservation& rs = reservations_.at(tr.sell_order_id);
        const double coin_release = std::min(rs.coins, tr.amount);
        rs.coins -= coin_release;
        seller.committed_coins = std::max(0.0, seller.committed_coins - coin_release);
        seller.coins -= tr.amount;
        seller.cash += notional;
    }

    /// Frees whatever an order still reserves once it has left the book.
    void release(OrderId id) {
        auto it = reservations_.find(id);
        if (it == reservations_.end()) return;
        const Reservation& r = it->second;
        auto t = traders_.find(r.trader);
        if (t != traders_.end()) {
            t->second.committed_cash = std::max(0.0, t->second.committed_cash - r.cash);
            t->second.committed_coins = std::max(0.0, t->second.committed_coins - r.coins);
        }
        reservations_.erase(it);
    }

    MarketParams params_;
    Book book_;
    Rng rng_;
    std::map<TraderId, Trader> traders_;
    std::map<OrderId, Reservation> reservations_;
    std::vector<double> pool_;
    std::vector<double> closes_;  // closes_[0] is the opening price, then one per day
    std::vector<Trade> trades_;
    std::size_t day_trades_begin_ = 0;
    double mining_carry_ = 0.0;
    Day day_ = 0;
    TraderId next_trader_id_ = 0;
    OrderId next_order_id_ = 1;
    std::uint64_t next_seq_ = 0;
};

/// Runs the whole schedule. Deterministic in (params, schedule, seed).
inline RunResult run(const MarketParams& params, const DriverSchedule& schedule, std::uint64_t seed) {
    if (schedule.horizon() == 0) throw std::invalid_argument("run: empty schedule");
    Market market(params, seed);
    RunResult out;
    out.series.days.reserve(schedule.horizon());
    for (std::size_t d = 0; d < schedule.horizon(); ++d)
        out.series.days.push_back(market.step(schedule.target_traders[d], schedule.mined_coins[d]));
    out.trades = market.trades();
    return out;
}

inline void write_series_csv(std::ostream& out, const MarketSeries& s) {
    out << std::setprecision(17);
    out << "day,price,volume,traders,coins,random_coins,chartist_coins,random_cash,chartist_cash,"
           "random_wealth,chartist_wealth\n";
    for (const auto& d : s.days)
        out << d.day << ',' << d.close_price << ',' << d.volume << ',' << d.trader_count << ','
            << d.total_coins << ',' << d.random_coins << ',' << d.chartist_coins << ','
            << d.random_cash << ',' << d.chartist_cash << ',' << d.random_wealth << ','
            << d.chartist_wealth << '\n';
}

}  // namespace cmsim

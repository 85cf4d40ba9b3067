#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "cmsim/agents.hpp"

namespace cmsim {

using OrderId = std::uint64_t;

/// Smallest tradable amount (one satoshi). Residuals below it count as filled.
inline constexpr double kCoinQuantum = 1e-8;

struct BookOrder {
    OrderId order_id = 0;
    TraderId trader_id = 0;
    Side side = Side::Buy;
    double original_amount = 0.0;
    double residual = 0.0;
    double limit_price = 0.0;  // 0 = market
    std::uint64_t issue_seq = 0;
    Day issue_day = 0;
    Day expiry_day = 0;
    // Market buys only: cash still available to pay for fills. A fill never
    // spends more than this; the order is finished once it is used up.
    std::optional<double> cash_budget;

    [[nodiscard]] bool is_market() const noexcept { return limit_price == 0.0; }
};

struct Trade {
    OrderId buy_order_id = 0;
    OrderId sell_order_id = 0;
    TraderId buy_trader = 0;
    TraderId sell_trader = 0;
    double price = 0.0;
    double amount = 0.0;
    Day day = 0;
};

/// True when the head buy (limit b) and head sell (limit s) can trade.
constexpr bool heads_match(double buy_limit, double sell_limit) noexcept {
    return buy_limit == 0.0 || sell_limit == 0.0 || sell_limit <= buy_limit;
}

/// Transaction price for a matched pair given the current price.
constexpr double match_price(double buy_limit, double sell_limit, double current) noexcept {
    const bool buy_market = buy_limit == 0.0;
    const bool sell_market = sell_limit == 0.0;
    if (buy_market && sell_market) return current;
    if (sell_market) return std::min(buy_limit, current);
    if (buy_market) return std::max(sell_limit, current);
    return 0.5 * (buy_limit + sell_limit);
}

/// Coins exchanged when `buy` meets `sell` at `price`.
inline double fill_amount(const BookOrder& buy, const BookOrder& sell, double price) {
    double amount = std::min(buy.residual, sell.residual);
    if (buy.cash_budget) amount = std::min(amount, *buy.cash_budget / price);
    return amount;
}

/// Applies one fill to both orders; returns true for each order that is done.
inline std::pair<bool, bool> apply_fill(BookOrder& buy, BookOrder& sell, double amount,
                                        double price) {
    buy.residual -= amount;
    sell.residual -= amount;
    bool buy_done = buy.residual < kCoinQuantum;
    if (buy.cash_budget) {
        *buy.cash_budget -= amount * price;
        if (*buy.cash_budget / price < kCoinQuantum) buy_done = true;
    }
    const bool sell_done = sell.residual < kCoinQuantum;
    if (buy_done) buy.residual = std::max(0.0, buy.residual);
    if (sell_done) sell.residual = std::max(0.0, sell.residual);
    return {buy_done, sell_done};
}

/// Continuous limit order book with price-time priority: buys by descending
/// limit, sells by ascending limit, ties by arrival.
class Book {
public:
    explicit Book(double initial_price) : last_price_(initial_price) {
        if (!(initial_price > 0)) throw std::invalid_argument("Book: initial price must be > 0");
    }

    /// Rests `order` by priority, then trades the heads while they match.
    std::vector<Trade> insert(BookOrder order) {
        if (!(order.residual > 0) || order.residual > order.original_amount || order.limit_price < 0)
            throw std::invalid_argument("Book::insert: invalid order");
        if (index_.count(order.order_id)) throw std::invalid_argument("Book::insert: duplicate id");
        const Day day = order.issue_day;
        add(std::move(order));

        std::vector<Trade> trades;
        while (!buys_.empty() && !sells_.empty()) {
            auto b_it = buys_.begin();
            auto s_it = sells_.begin();
            BookOrder& buy = b_it->second;
            BookOrder& sell = s_it->second;
            if (!heads_match(buy.limit_price, sell.limit_price)) break;

            const double price = match_price(buy.limit_price, sell.limit_price, last_price_);
            const double amount = fill_amount(buy, sell, price);
            trades.push_back(
                {buy.order_id, sell.order_id, buy.trader_id, sell.trader_id, price, amount, day});
            last_price_ = price;

            const auto [buy_done, sell_done] = apply_fill(buy, sell, amount, price);
            if (buy_done) {
                index_.erase(buy.order_id);
                buys_.erase(b_it);
            }
            if (sell_done) {
                index_.erase(sell.order_id);
                sells_.erase(s_it);
            }
        }
        return trades;
    }

    /// Removes and returns all orders whose expiry day is before `day`.
    std::vector<BookOrder> expire(Day day) {
        std::vector<BookOrder> out;
        auto sweep = [&](auto& side) {
            for (auto it = side.begin(); it != side.end();) {
                if (it->second.expiry_day < day) {
                    index_.erase(it->second.order_id);
                    out.push_back(std::move(it->second));
                    it = side.erase(it);
                } else {
                    ++it;
                }
            }
        };
        sweep(buys_);
        sweep(sells_);
        std::sort(out.begin(), out.end(),
                  [](const BookOrder& a, const BookOrder& b) { return a.issue_seq < b.issue_seq; });
        return out;
    }

    /// Withdraws a resting order, if present.
    std::optional<BookOrder> cancel(OrderId id) {
        auto it = index_.find(id);
        if (it == index_.end()) return std::nullopt;
        const Key key = it->second.key;
        const Side side = it->second.side;
        index_.erase(it);
        if (side == Side::Buy) {
            auto node = buys_.extract(key);
            return std::move(node.mapped());
        }
        auto node = sells_.extract(key);
        return std::move(node.mapped());
    }

    [[nodiscard]] const BookOrder* find(OrderId id) const {
        auto it = index_.find(id);
        if (it == index_.end()) return nullptr;
        const auto& side = it->second.side == Side::Buy ? buys_ : sells_;
        return &side.at(it->second.key);
    }

    [[nodiscard]] bool contains(OrderId id) const { return index_.count(id) != 0; }
    [[nodiscard]] double last_price() const noexcept { return last_price_; }
    [[nodiscard]] std::size_t size() const noexcept { return buys_.size() + sells_.size(); }
    [[nodiscard]] bool empty() const noexcept { return size() == 0; }

    /// Orders in priority sequence, best first.
    [[nodiscard]] std::vector<BookOrder> buys() const { return flatten(buys_); }
    [[nodiscard]] std::vector<BookOrder> sells() const { return flatten(sells_); }

    /// True when the two heads could still trade; never holds between inserts.
    [[nodiscard]] bool crossed() const {
        return !buys_.empty() && !sells_.empty() &&
               heads_match(buys_.begin()->second.limit_price, sells_.begin()->second.limit_price);
    }

private:
    // Priority key: smaller is better on both sides. Buys store the negated
    // limit. A zero limit is ranked as the number 0, so market buys queue
    // behind every limit buy and market sells ahead of every limit sell.
    struct Key {
        double price_rank;
        std::uint64_t seq;
        bool operator<(const Key& o) const noexcept {
            if (price_rank != o.price_rank) return price_rank < o.price_rank;
            return seq < o.seq;
        }
    };
    struct Location {
        Side side;
        Key key;
    };

    static Key key_for(const BookOrder& o) {
        if (o.side == Side::Buy) return {o.is_market() ? 0.0 : -o.limit_price, o.issue_seq};
        return {o.limit_price, o.issue_seq};
    }

    void add(BookOrder order) {
        const Key key = key_for(order);
        index_.emplace(order.order_id, Location{order.side, key});
        auto& side = order.side == Side::Buy ? buys_ : sells_;
        side.emplace(key, std::move(order));
    }

    static std::vector<BookOrder> flatten(const std::map<Key, BookOrder>& side) {
        std::vector<BookOrder> out;
        out.reserve(side.size());
        for (const auto& [k, o] : side) out.push_back(o);
        return out;
    }

    std::map<Key, BookOrder> buys_;
    std::map<Key, BookOrder> sells_;
    std::unordered_map<OrderId, Location> index_;
    double last_price_;
};

inline void write_trades_csv(std::ostream& out, const std::vector<Trade>& trades) {
    out << std::setprecision(17);
    out << "day,price,amount,buy_trader,sell_trader\n";
    for (const auto& t : trades)
        out << t.day << ',' << t.price << ',' << t.amount << ',' << t.buy_trader << ','
            << t.sell_trader << '\n';
}

}  // namespace cmsim

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cmsim {

/// Daily on-chain driver data: unique addresses, circulating supply and an
/// optional reference price.
struct EmpiricalSeries {
    std::vector<std::int64_t> day_index;
    std::vector<double> unique_addresses;
    std::vector<double> total_coins;
    std::vector<std::optional<double>> price;

    [[nodiscard]] std::size_t size() const noexcept { return day_index.size(); }
};

/// Per-day targets consumed by the engine. Already divided by the market scale.
struct DriverSchedule {
    std::vector<std::int64_t> target_traders;
    std::vector<double> mined_coins;

    [[nodiscard]] std::size_t horizon() const noexcept { return target_traders.size(); }
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline double parse_number(const std::string& text, std::size_t line, const char* field) {
    const std::string t = trim(text);
    if (t.empty()) throw ParseError(line, std::string("empty field '") + field + "'");
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(t, &used);
    } catch (const std::exception&) {
        throw ParseError(line, std::string("cannot parse '") + field + "' from '" + t + "'");
    }
    if (used != t.size() || !std::isfinite(value))
        throw ParseError(line, std::string("cannot parse '") + field + "' from '" + t + "'");
    return value;
}

}  // namespace detail

/// Parses the `day,unique_addresses,total_coins,price` CSV format. Rows are
/// sorted by day before validation; the price column may be empty.
inline EmpiricalSeries parse_series(std::istream& in) {
    struct Row {
        std::int64_t day;
        double addresses;
        double coins;
        std::optional<double> price;
    };
    std::vector<Row> rows;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        if (!header_seen) {
            header_seen = true;
            if (t.rfind("day", 0) == 0) continue;
        }
        auto fields = detail::split_csv_line(t);
        if (fields.size() != 3 && fields.size() != 4)
            throw ParseError(line_no, "expected 4 fields, got " + std::to_string(fields.size()));
        const double day = detail::parse_number(fields[0], line_no, "day");
        if (day < 0 || day != std::floor(day))
            throw ParseError(line_no, "day must be a non-negative integer");
        Row row{static_cast<std::int64_t>(day),
                detail::parse_number(fields[1], line_no, "unique_addresses"),
                detail::parse_number(fields[2], line_no, "total_coins"), std::nullopt};
        if (fields.size() == 4 && !detail::trim(fields[3]).empty())
            row.price = detail::parse_number(fields[3], line_no, "price");
        rows.push_back(row);
    }
    if (rows.empty()) throw ValidationError("no rows");

    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.day < b.day; });

    EmpiricalSeries s;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Row& r = rows[i];
        if (i > 0 && r.day != rows[i - 1].day + 1)
            throw ValidationError("gap in days between " + std::to_string(rows[i - 1].day) +
                                  " and " + std::to_string(r.day));
        if (r.addresses < 0)
            throw ValidationError("negative unique_addresses at day " + std::to_string(r.day));
        if (i > 0 && r.coins < rows[i - 1].coins)
            throw ValidationError("total_coins decreases at day " + std::to_string(r.day));
        s.day_index.push_back(r.day);
        s.unique_addresses.push_back(r.addresses);
        s.total_coins.push_back(r.coins);
        s.price.push_back(r.price);
    }
    return s;
}

inline EmpiricalSeries load_series(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return parse_series(in);
}

/// Trailing mean over the last `window` points, truncated at the start.
inline std::vector<double> moving_average(std::span<const double> series, std::size_t window) {
    if (window == 0) throw std::invalid_argument("moving_average: window must be >= 1");
    std::vector<double> out(series.size());
    double acc = 0.0;
    for (std::size_t t = 0; t < series.size(); ++t) {
        acc += series[t];
        if (t >= window) acc -= series[t - window];
        const std::size_t n = std::min(t + 1, window);
        out[t] = acc / static_cast<double>(n);
    }
    return out;
}

/// Cubic fit of the circulating supply, in market-scaled coins (one unit is
/// 100 real coins at the default scale).
constexpr double supply_polynomial(double t) noexcept {
    return 4.709e-5 * t * t * t - 0.08932 * t * t + 98.88 * t + 78880.0;
}

inline constexpr std::size_t kAddressSmoothingWindow = 30;

inline DriverSchedule build_schedule(const EmpiricalSeries& series, std::size_t horizon,
                                     double scale) {
    if (horizon == 0) throw std::invalid_argument("build_schedule: horizon must be >= 1");
    if (!(scale > 0)) throw std::invalid_argument("build_schedule: scale must be > 0");
    if (horizon > series.size())
        throw ValidationError("horizon " + std::to_string(horizon) + " exceeds series length " +
                              std::to_string(series.size()));

    const auto smoothed = moving_average(series.unique_addresses, kAddressSmoothingWindow);
    DriverSchedule s;
    s.target_traders.resize(horizon);
    s.mined_coins.assign(horizon, 0.0);
    for (std::size_t t = 0; t < horizon; ++t) {
        s.target_traders[t] = std::llround(smoothed[t] / scale);
        if (t > 0)
            s.mined_coins[t] =
                std::max(0.0, (series.total_coins[t] - series.total_coins[t - 1]) / scale);
    }
    return s;
}

/// Schedule without external data: traders grow linearly from `initial_traders`
/// to `final_traders` on the last day, and the supply follows the cubic fit.
inline DriverSchedule build_synthetic_schedule(std::size_t horizon, std::int64_t initial_traders,
                                               std::int64_t final_traders, double scale) {
    if (horizon == 0) throw std::invalid_argument("build_schedule: horizon must be >= 1");
    if (!(scale > 0)) throw std::invalid_argument("build_schedule: scale must be > 0");

    EmpiricalSeries synth;
    for (std::size_t t = 0; t < horizon; ++t) {
        synth.day_index.push_back(static_cast<std::int64_t>(t));
        // Expressed in real units so the generic diff/scale rule recovers the
        // polynomial's own (already scaled) increments.
        synth.total_coins.push_back(supply_polynomial(static_cast<double>(t)) * scale);
    }

    DriverSchedule s;
    s.target_traders.resize(horizon);
    s.mined_coins.assign(horizon, 0.0);
    const double span = horizon > 1 ? static_cast<double>(horizon - 1) : 1.0;
    for (std::size_t t = 0; t < horizon; ++t) {
        const double frac = horizon > 1 ? static_cast<double>(t) / span : 0.0;
        s.target_traders[t] = std::llround(static_cast<double>(initial_traders) +
                                           frac * static_cast<double>(final_traders - initial_traders));
        if (t > 0)
            s.mined_coins[t] =
                std::max(0.0, (synth.total_coins[t] - synth.total_coins[t - 1]) / scale);
    }
    return s;
}

}  // namespace cmsim

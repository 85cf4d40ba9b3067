#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cmsim/data_ingest.hpp"
#include "cmsim/engine.hpp"
#include "cmsim/stats.hpp"

namespace cmsim {

struct SimConfig {
    std::size_t horizon = 830;
    std::int64_t n_traders_0 = 100;
    std::int64_t n_traders_final = 1500;
    double total_coins_0 = 80'000.0;
    double price_0 = 5.0;
    double total_cash_0 = 400'000.0;
    double entrant_top_cash = 400'000.0;
    double entrant_alpha = 0.6;
    double initial_alpha = 1.0;
    double p_random = 0.7;
    double p_chartist = 0.3;
    BehaviorParams behavior;
    double scale = 100.0;
    std::uint64_t seed = 1;
    std::string data_path;  // empty: synthetic drivers
    double x_min = 0.1;
    double tail_quantile = 0.0;
    std::size_t acf_max_lag = 50;
    std::size_t mc_runs = 100;

    [[nodiscard]] MarketParams market_params() const {
        MarketParams p;
        p.behavior = behavior;
        p.initial_price = price_0;
        p.p_random = p_random;
        p.endowment.initial_traders = static_cast<std::size_t>(n_traders_0);
        p.endowment.final_traders = static_cast<std::size_t>(n_traders_final);
        p.endowment.total_coins = total_coins_0;
        p.endowment.total_cash = total_cash_0;
        p.endowment.initial_alpha = initial_alpha;
        p.endowment.entrant_top_cash = entrant_top_cash;
        p.endowment.entrant_alpha = entrant_alpha;
        return p;
    }

    [[nodiscard]] stats::AnalysisParams analysis_params() const {
        stats::AnalysisParams a;
        a.acf_max_lag = acf_max_lag;
        a.x_min = x_min;
        a.tail_quantile = tail_quantile;
        return a;
    }

    /// Synthetic drivers unless `data_path` names an empirical series file.
    [[nodiscard]] DriverSchedule schedule() const {
        if (data_path.empty())
            return build_synthetic_schedule(horizon, n_traders_0, n_traders_final, scale);
        DriverSchedule s = build_schedule(load_series(data_path), horizon, scale);
        if (s.target_traders.front() != n_traders_0)
            throw ValidationError("data file implies " + std::to_string(s.target_traders.front()) +
                                  " initial traders but n_traders_0 = " +
                                  std::to_string(n_traders_0));
        return s;
    }
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

template <class T>
T parse_value(const std::string& key, const std::string& text) {
    std::istringstream in(text);
    T value{};
    in >> value;
    if (in.fail() || !(in >> std::ws).eof())
        throw ConfigError("invalid value '" + text + "' for key '" + key + "'");
    return value;
}

struct Field {
    std::function<void(SimConfig&, const std::string&)> set;
    std::function<std::string(const SimConfig&)> get;
};

template <class T, class Access>
Field make_field(const std::string& key, Access access) {
    return {[key, access](SimConfig& c, const std::string& v) {
                access(c) = parse_value<T>(key, v);
            },
            [access](const SimConfig& c) {
                SimConfig copy = c;
                std::ostringstream out;
                out << std::setprecision(17) << access(copy);
                return out.str();
            }};
}

#define CMSIM_FIELD(type, key, expr) \
    {key, make_field<type>(key, [](SimConfig& c) -> type& { return expr; })}

inline const std::vector<std::pair<std::string, Field>>& config_fields() {
    static const std::vector<std::pair<std::string, Field>> fields = {
        CMSIM_FIELD(std::size_t, "horizon", c.horizon),
        CMSIM_FIELD(std::int64_t, "n_traders_0", c.n_traders_0),
        CMSIM_FIELD(std::int64_t, "n_traders_final", c.n_traders_final),
        CMSIM_FIELD(double, "total_coins_0", c.total_coins_0),
        CMSIM_FIELD(double, "price_0", c.price_0),
        CMSIM_FIELD(double, "total_cash_0", c.total_cash_0),
        CMSIM_FIELD(double, "entrant_top_cash", c.entrant_top_cash),
        CMSIM_FIELD(double, "entrant_alpha", c.entrant_alpha),
        CMSIM_FIELD(double, "initial_alpha", c.initial_alpha),
        CMSIM_FIELD(double, "p_random", c.p_random),
        CMSIM_FIELD(double, "p_chartist", c.p_chartist),
        CMSIM_FIELD(double, "p_active_random", c.behavior.p_active_random),
        CMSIM_FIELD(double, "p_active_chartist", c.behavior.p_active_chartist),
        CMSIM_FIELD(double, "p_market_random", c.behavior.p_market_random),
        CMSIM_FIELD(double, "p_market_chartist", c.behavior.p_market_chartist),
        CMSIM_FIELD(double, "mu", c.behavior.mu),
        CMSIM_FIELD(double, "K", c.behavior.K),
        CMSIM_FIELD(std::size_t, "T_window", c.behavior.T_window),
        CMSIM_FIELD(double, "beta_mean", c.behavior.beta_mean),
        CMSIM_FIELD(double, "beta_std", c.behavior.beta_std),
        CMSIM_FIELD(double, "threshold", c.behavior.threshold),
        CMSIM_FIELD(double, "expiry_mean", c.behavior.expiry_mean),
        CMSIM_FIELD(double, "expiry_std", c.behavior.expiry_std),
        CMSIM_FIELD(int, "chartist_window_min", c.behavior.chartist_window_min),
        CMSIM_FIELD(int, "chartist_window_max", c.behavior.chartist_window_max),
        CMSIM_FIELD(double, "scale", c.scale),
        CMSIM_FIELD(std::uint64_t, "seed", c.seed),
        {"data_path",
         {[](SimConfig& c, const std::string& v) { c.data_path = v; },
          [](const SimConfig& c) { return c.data_path; }}},
        CMSIM_FIELD(double, "x_min", c.x_min),
        CMSIM_FIELD(double, "tail_quantile", c.tail_quantile),
        CMSIM_FIELD(std::size_t, "acf_max_lag", c.acf_max_lag),
        CMSIM_FIELD(std::size_t, "mc_runs", c.mc_runs),
    };
    return fields;
}

#undef CMSIM_FIELD

inline const Field* find_field(const std::string& key) {
    for (const auto& [k, f] : config_fields())
        if (k == key) return &f;
    return nullptr;
}

}  // namespace detail

inline std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const auto& [k, f] : detail::config_fields()) keys.push_back(k);
    return keys;
}

inline void set_config_value(SimConfig& c, const std::string& key, const std::string& value) {
    const auto* field = detail::find_field(key);
    if (!field) {
        std::string valid;
        for (const auto& k : config_keys()) valid += (valid.empty() ? "" : ", ") + k;
        throw ConfigError("unknown key '" + key + "'; valid keys: " + valid);
    }
    field->set(c, value);
}

/// Throws ConfigError naming the first offending field.
inline void validate(const SimConfig& c) {
    auto fail = [](const std::string& field, const std::string& why) {
        throw ConfigError(field + ": " + why);
    };
    auto prob = [&](double p, const char* name) {
        if (!(p >= 0.0 && p <= 1.0)) fail(name, "must lie in [0,1]");
    };
    if (c.horizon < 1) fail("horizon", "must be >= 1");
    if (c.n_traders_0 < 1) fail("n_traders_0", "must be >= 1");
    if (c.n_traders_final < c.n_traders_0) fail("n_traders_final", "must be >= n_traders_0");
    if (!(c.total_coins_0 > 0)) fail("total_coins_0", "must be > 0");
    if (!(c.price_0 > 0)) fail("price_0", "must be > 0");
    if (!(c.total_cash_0 > 0)) fail("total_cash_0", "must be > 0");
    if (!(c.entrant_top_cash > 0)) fail("entrant_top_cash", "must be > 0");
    if (!(c.entrant_alpha > 0)) fail("entrant_alpha", "must be > 0");
    if (!(c.initial_alpha > 0)) fail("initial_alpha", "must be > 0");
    prob(c.p_random, "p_random");
    prob(c.p_chartist, "p_chartist");
    if (std::abs(c.p_random + c.p_chartist - 1.0) > 1e-12)
        fail("p_chartist", "p_random + p_chartist must equal 1");
    try {
        c.behavior.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (!(c.scale > 0)) fail("scale", "must be > 0");
    if (!(c.x_min > 0)) fail("x_min", "must be > 0");
    if (!(c.tail_quantile >= 0 && c.tail_quantile < 1)) fail("tail_quantile", "must lie in [0,1)");
    if (c.acf_max_lag < 1) fail("acf_max_lag", "must be >= 1");
    if (c.mc_runs < 1) fail("mc_runs", "must be >= 1");
}

/// Applies `key = value` lines; `#` starts a comment.
inline void apply_config_stream(SimConfig& c, std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
        set_config_value(c, detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
    }
}

/// Built-in defaults, then the file (if any), then overrides in order.
inline SimConfig parse_config(const std::optional<std::string>& path,
                              const std::vector<std::pair<std::string, std::string>>& overrides) {
    SimConfig c;
    if (path) {
        std::ifstream in(*path);
        if (!in) throw ConfigError("cannot open config file " + *path);
        apply_config_stream(c, in);
    }
    for (const auto& [k, v] : overrides) set_config_value(c, k, v);
    validate(c);
    return c;
}

/// Fully resolved configuration in the same `key = value` format it is read from.
inline void write_config(std::ostream& out, const SimConfig& c) {
    for (const auto& [k, f] : detail::config_fields()) out << k << " = " << f.get(c) << '\n';
}

}  // namespace cmsim

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "cmsim/config.hpp"
#include "cmsim/engine.hpp"
#include "cmsim/stats.hpp"

namespace cmsim {

namespace fs = std::filesystem;

inline std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

struct SimulateOutput {
    RunResult run;
    std::optional<stats::StatsReport> report;
};

/// One run plus its stylized-fact report. Writes config.txt, series.csv and
/// trades.csv into `out_dir`, plus acf.csv, ccdf.csv and summary.csv when the
/// run is long enough for the report.
inline SimulateOutput cmd_simulate(const SimConfig& config, const fs::path& out_dir) {
    validate(config);
    fs::create_directories(out_dir);
    {
        auto out = open_output(out_dir / "config.txt");
        write_config(out, config);
    }
    SimulateOutput result;
    result.run = run(config.market_params(), config.schedule(), config.seed);
    {
        auto out = open_output(out_dir / "series.csv");
        write_series_csv(out, result.run.series);
    }
    {
        auto out = open_output(out_dir / "trades.csv");
        write_trades_csv(out, result.run.trades);
    }
    const auto prices = result.run.series.prices();
    if (prices.size() >= std::max(stats::kAdfMinLength, config.acf_max_lag + 3)) {
        result.report = stats::analyze(prices, config.analysis_params());
        auto acf = open_output(out_dir / "acf.csv");
        stats::write_acf_csv(acf, *result.report);
        auto ccdf = open_output(out_dir / "ccdf.csv");
        stats::write_ccdf_csv(ccdf, *result.report);
        auto summary = open_output(out_dir / "summary.csv");
        stats::write_summary_csv(summary, *result.report);
    }
    return result;
}

/// Per-run figures reported by the Monte Carlo driver.
struct RunSummary {
    std::uint64_t seed = 0;
    double tau3 = 0.0;
    double tail_slope = 0.0;
    double tail_r2 = 0.0;
    double mean_abs_acf = 0.0;  // mean rho_abs(k), k = 1..20
    double mean_abs_raw = 0.0;  // mean |rho_raw(k)|, k = 1..20
    double final_price = 0.0;
};

inline constexpr std::size_t kSummaryLags = 20;

inline RunSummary summarize_run(std::uint64_t seed, const MarketSeries& series,
                                const stats::AnalysisParams& params) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    RunSummary s;
    s.seed = seed;
    s.final_price = series.days.back().close_price;
    const auto prices = series.prices();
    s.tau3 = s.tail_slope = s.tail_r2 = s.mean_abs_acf = s.mean_abs_raw = nan;
    if (prices.size() < stats::kAdfMinLength) return s;
    stats::AnalysisParams p = params;
    p.acf_max_lag = std::max(p.acf_max_lag, kSummaryLags);
    s.tau3 = stats::adf_tau3(prices, p.adf_lags).tau3;
    try {
        const auto rep = stats::analyze(prices, p);
        if (rep.tail) {
            s.tail_slope = rep.tail->slope;
            s.tail_r2 = rep.tail->r_squared;
        }
        s.mean_abs_acf = rep.mean_abs_acf(kSummaryLags);
        s.mean_abs_raw = rep.mean_abs_raw(kSummaryLags);
    } catch (const std::domain_error&) {
        // flat price path: correlations undefined
    } catch (const std::invalid_argument&) {
        // horizon too short for the requested lags
    }
    return s;
}

struct MonteCarloOutput {
    std::vector<RunResult> runs;  // index i holds seed config.seed + i
    std::vector<RunSummary> summaries;
    stats::McAggregate aggregate;
};

class RunFailure : public std::runtime_error {
public:
    RunFailure(std::uint64_t seed, const std::string& why)
        : std::runtime_error("run with seed " + std::to_string(seed) + " failed: " + why),
          seed_(seed) {}
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
};

/// Runs seeds seed..seed+mc_runs-1 on `workers` threads. Results are stored by
/// seed index, so the output does not depend on the worker count.
inline MonteCarloOutput run_montecarlo(const SimConfig& config, std::size_t workers) {
    validate(config);
    if (config.mc_runs < 2) throw ConfigError("mc_runs: must be >= 2 for montecarlo");
    const MarketParams params = config.market_params();
    const DriverSchedule schedule = config.schedule();
    const stats::AnalysisParams analysis = config.analysis_params();

    MonteCarloOutput out;
    out.runs.resize(config.mc_runs);
    out.summaries.resize(config.mc_runs);
    std::vector<std::exception_ptr> errors(config.mc_runs);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next++; i < config.mc_runs; i = next++) {
            const std::uint64_t seed = config.seed + i;
            try {
                out.runs[i] = run(params, schedule, seed);
                out.summaries[i] = summarize_run(seed, out.runs[i].series, analysis);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    workers = std::clamp<std::size_t>(workers, 1, config.mc_runs);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const std::exception& e) {
            throw RunFailure(config.seed + i, e.what());
        }
    }

    std::vector<std::vector<double>> paths;
    paths.reserve(out.runs.size());
    for (const auto& r : out.runs) paths.push_back(r.series.prices());
    out.aggregate = stats::mc_aggregate(paths);
    return out;
}

inline void write_aggregate_csv(std::ostream& out, const stats::McAggregate& a) {
    out << std::setprecision(17) << "day,mean,std\n";
    for (std::size_t t = 0; t < a.mean.size(); ++t)
        out << t << ',' << a.mean[t] << ',' << a.stddev[t] << '\n';
}

inline void write_run_summaries_csv(std::ostream& out, const std::vector<RunSummary>& rows) {
    out << std::setprecision(17)
        << "seed,tau3,tail_slope,tail_r2,mean_abs_acf,mean_abs_raw,final_price\n";
    for (const auto& r : rows)
        out << r.seed << ',' << r.tau3 << ',' << r.tail_slope << ',' << r.tail_r2 << ','
            << r.mean_abs_acf << ',' << r.mean_abs_raw << ',' << r.final_price << '\n';
}

/// Writes config.txt, mc_aggregate.csv, mc_runs.csv and, when `keep_series`
/// is set, runs/series_<seed>.csv for every run.
inline MonteCarloOutput cmd_montecarlo(const SimConfig& config, const fs::path& out_dir,
                                       std::size_t workers, bool keep_series = false) {
    MonteCarloOutput mc = run_montecarlo(config, workers);
    fs::create_directories(out_dir);
    {
        auto out = open_output(out_dir / "config.txt");
        write_config(out, config);
    }
    {
        auto out = open_output(out_dir / "mc_aggregate.csv");
        write_aggregate_csv(out, mc.aggregate);
    }
    {
        auto out = open_output(out_dir / "mc_runs.csv");
        write_run_summaries_csv(out, mc.summaries);
    }
    if (keep_series) {
        fs::create_directories(out_dir / "runs");
        for (std::size_t i = 0; i < mc.runs.size(); ++i) {
            auto out = open_output(out_dir / "runs" /
                                   ("series_" + std::to_string(config.seed + i) + ".csv"));
            write_series_csv(out, mc.runs[i].series);
        }
    }
    return mc;
}

/// Reads the `price` column of a CSV with a header row; the column is found
/// by name, so both `day,price` and full series files work. Empty cells are
/// skipped.
inline std::vector<double> read_price_column(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("price file is empty");
    const auto header = detail::split_csv_line(detail::trim(line));
    std::size_t col = header.size();
    for (std::size_t i = 0; i < header.size(); ++i)
        if (detail::trim(header[i]) == "price") col = i;
    if (col == header.size()) throw std::invalid_argument("price file has no 'price' column");
    std::vector<double> prices;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        const auto fields = detail::split_csv_line(t);
        if (col >= fields.size() || detail::trim(fields[col]).empty()) continue;
        prices.push_back(detail::parse_number(fields[col], line_no, "price"));
    }
    return prices;
}

/// Stylized-fact report for an external price series.
inline stats::StatsReport cmd_analyze(const std::vector<double>& prices,
                                      const stats::AnalysisParams& params, const fs::path& out_dir) {
    if (prices.size() < stats::kAdfMinLength)
        throw std::invalid_argument("analyze: need at least 25 prices, got " +
                                    std::to_string(prices.size()));
    const auto rep = stats::analyze(prices, params);
    fs::create_directories(out_dir);
    auto acf = open_output(out_dir / "acf.csv");
    stats::write_acf_csv(acf, rep);
    auto ccdf = open_output(out_dir / "ccdf.csv");
    stats::write_ccdf_csv(ccdf, rep);
    auto summary = open_output(out_dir / "summary.csv");
    stats::write_summary_csv(summary, rep);
    return rep;
}

}  // namespace cmsim

// Command-line front end: simulate, montecarlo, analyze.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "cmsim/commands.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::vector<std::string> sets;
    std::map<std::string, std::string> key_flags;
};

void add_config_options(CLI::App& cmd, CommonArgs& args) {
    cmd.add_option("-c,--config", args.config_path, "Config file with `key = value` lines");
    cmd.add_option("-o,--out", args.out_dir, "Output directory")->capture_default_str();
    cmd.add_option("--set", args.sets, "Override any config key: --set key=value");
    for (const auto& key : cmsim::config_keys())
        cmd.add_option("--" + key, args.key_flags[key], "Override config key " + key);
}

cmsim::SimConfig resolve(const CommonArgs& args) {
    std::vector<std::pair<std::string, std::string>> overrides;
    for (const auto& kv : args.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw cmsim::ConfigError("--set expects key=value, got '" + kv + "'");
        overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
    }
    for (const auto& key : cmsim::config_keys()) {
        const auto& v = args.key_flags.at(key);
        if (!v.empty()) overrides.emplace_back(key, v);
    }
    std::optional<std::string> path;
    if (!args.config_path.empty()) path = args.config_path;
    return cmsim::parse_config(path, overrides);
}

void echo_config(const cmsim::SimConfig& c) {
    std::cout << "# resolved configuration\n";
    cmsim::write_config(std::cout, c);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Agent-based cryptocurrency market simulator"};
    app.require_subcommand(1);

    CommonArgs sim_args;
    auto* simulate = app.add_subcommand("simulate", "Run one simulation and analyse its prices");
    add_config_options(*simulate, sim_args);

    CommonArgs mc_args;
    std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
    bool keep_series = false;
    auto* montecarlo = app.add_subcommand("montecarlo", "Run mc_runs seeds and aggregate prices");
    add_config_options(*montecarlo, mc_args);
    montecarlo->add_option("-j,--jobs", jobs, "Worker threads")->capture_default_str();
    montecarlo->add_flag("--keep-series", keep_series, "Also write every run's series CSV");

    CommonArgs an_args;
    std::string prices_path;
    auto* analyze = app.add_subcommand("analyze", "Stylized-fact report for a price CSV");
    add_config_options(*analyze, an_args);
    analyze->add_option("prices", prices_path, "CSV with a header and a `price` column")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate) {
            const auto config = resolve(sim_args);
            echo_config(config);
            const auto out = cmsim::cmd_simulate(config, sim_args.out_dir);
            std::cout << "# wrote " << out.run.series.size() << " days, " << out.run.trades.size()
                      << " trades to " << sim_args.out_dir << '\n';
            if (out.report) cmsim::stats::write_summary_csv(std::cout, *out.report);
        } else if (*montecarlo) {
            const auto config = resolve(mc_args);
            echo_config(config);
            const auto mc = cmsim::cmd_montecarlo(config, mc_args.out_dir, jobs, keep_series);
            std::cout << "# wrote " << mc.summaries.size() << " run summaries to "
                      << mc_args.out_dir << '\n';
        } else if (*analyze) {
            const auto config = resolve(an_args);
            std::ifstream in(prices_path);
            if (!in) throw std::runtime_error("cannot open " + prices_path);
            const auto prices = cmsim::read_price_column(in);
            const auto rep = cmsim::cmd_analyze(prices, config.analysis_params(), an_args.out_dir);
            cmsim::stats::write_summary_csv(std::cout, rep);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return EXIT_FAILURE;
    }
    return EXIT_SUCCESS;
}

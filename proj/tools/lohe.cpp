// lohe: scenario runner for the Lohe Hermitian sphere toolkit.
//
//   lohe run <config.yaml>   [--output-dir DIR] [--quiet]
//   lohe sweep <config.yaml> [--output-dir DIR] [--workers N] [--quiet]
//
// The default output directory comes from the config's `output` key, then
// LOHE_OUTPUT_DIR, then ./lohe_out.

#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "lohe/scenario.hpp"

namespace {

void print_summary(const lohe::RunSummary& s) {
    std::cout << s.id << ": exit " << s.exit_code << " (" << lohe::format_double(s.wall_time) << " s)\n";
    if (s.final_record) {
        const auto& r = *s.final_record;
        std::cout << "  final t=" << lohe::format_double(r.t) << " G=" << lohe::format_double(r.G)
                  << " rho=" << lohe::format_double(r.rho) << '\n';
    }
    for (const auto& c : s.checks) std::cout << "  " << (c.pass ? "PASS " : "FAIL ") << c.name << '\n';
    if (!s.error.empty()) std::cout << "  error: " << s.error << '\n';
    std::cout << "  csv:  " << s.csv_path.string() << "\n  json: " << s.json_path.string() << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation and verification runner for the second-order Lohe Hermitian sphere model"};
    app.require_subcommand(1);

    std::string config;
    std::string output_dir;
    bool quiet = false;
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());

    auto* run = app.add_subcommand("run", "Run a single scenario");
    run->add_option("config", config, "Scenario config (YAML)")->required();
    run->add_option("--output-dir", output_dir, "Directory for CSV/JSON output");
    run->add_flag("--quiet", quiet, "Suppress the console summary");

    auto* sweep = app.add_subcommand("sweep", "Run a kappa0 sweep");
    sweep->add_option("config", config, "Sweep config (YAML with a `sweep` section)")->required();
    sweep->add_option("--output-dir", output_dir, "Directory for CSV/JSON output");
    sweep->add_option("--workers", workers, "Number of grid points run in parallel")->check(CLI::PositiveNumber);
    sweep->add_flag("--quiet", quiet, "Suppress progress and summary output");

    CLI11_PARSE(app, argc, argv);

    lohe::RunOptions opts;
    opts.quiet = quiet;
    if (!output_dir.empty()) opts.output_dir = output_dir;

    try {
        const auto cfg = lohe::load_config(config);
        if (run->parsed()) {
            const auto summary = lohe::run_scenario(cfg, opts);
            if (!quiet) print_summary(summary);
            else if (!summary.error.empty()) std::cerr << summary.error << '\n';
            return summary.exit_code;
        }
        const auto result = lohe::run_sweep(cfg, opts, workers);
        if (!quiet) {
            for (const auto& r : result.rows)
                std::cout << "kappa0=" << lohe::format_double(r.kappa0) << " m=" << lohe::format_double(r.m)
                          << " tail_G=" << lohe::format_double(r.tail_G)
                          << " bound=" << lohe::format_double(r.practical_bound) << " exit=" << r.exit_code << '\n';
            std::cout << "tail strictly decreasing: " << (result.tail_strictly_decreasing ? "yes" : "no")
                      << "\nall within bound: " << (result.all_within_bound ? "yes" : "no")
                      << "\ncsv: " << result.csv_path.string() << '\n';
        }
        return result.exit_code;
    } catch (const lohe::ConfigError& e) {
        std::cerr << e.what() << '\n';
        return e.code();
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return lohe::exit_code::runtime;
    }
}

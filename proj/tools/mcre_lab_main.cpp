#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mcrelab/experiments.hpp"

int main(int argc, char** argv) {
    CLI::App app{"mcre-lab: simulation and verification lab for random iterations "
                 "with exogenous covariates"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string label;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;

    auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
    run->add_option("config", config_path, "path to the experiment config")->required();
    run->add_option("--out", out_dir, "output root directory (default: $MCRE_LAB_OUT or ./results)");
    run->add_option("--seed", seed, "master seed override")->each([&](const std::string&) {
        seed_set = true;
    });
    run->add_option("--threads", threads, "worker thread cap (0 = hardware)");
    run->add_option("--label", label, "result subdirectory name (default: timestamp)");

    std::string plot_dir;
    auto* plot = app.add_subcommand("plot", "emit plot data and SVG charts for a result directory");
    plot->add_option("dir", plot_dir, "result directory")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        mcrelab::experiments::RunOverrides overrides;
        if (!out_dir.empty()) overrides.out_root = out_dir;
        if (!label.empty()) overrides.label = label;
        if (seed_set) overrides.seed = seed;
        if (threads > 0) overrides.threads = threads;
        std::string result_dir;
        const int code = mcrelab::experiments::run_experiment(config_path, overrides, &result_dir);
        if (code == 0) std::cout << "results: " << result_dir << "\n";
        return code;
    }
    return mcrelab::experiments::emit_plots(plot_dir);
}

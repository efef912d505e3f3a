#include "gssl/cli.hpp"

#include <cstdint>
#include <iostream>

#include <CLI11.hpp>

#include "gssl/errors.hpp"
#include "gssl/experiments.hpp"

namespace gssl {

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::int64_t seed = -1;
    std::int64_t trials = -1;
    int threads = -1;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment config (JSON)")
            ->required();
        cmd->add_option("--seed", seed, "override the master seed");
        cmd->add_option("--out", out_dir, "override the output directory");
        cmd->add_option("--trials", trials, "override the trial count");
        cmd->add_option("--threads", threads, "worker threads (0 = auto)");
    }

    ExperimentConfig load() const {
        ExperimentConfig cfg = ExperimentConfig::from_json_file(config_path);
        if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (trials >= 0) {
            if (trials < 1) throw input_error("trials must be positive");
            cfg.trials = trials;
        }
        if (threads >= 0) cfg.threads = threads;
        return cfg;
    }
};

void report_written(const std::vector<std::string>& files) {
    for (const std::string& f : files) std::cout << "wrote " << f << '\n';
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"alpha-parametrized graph semi-supervised learning experiments"};
    app.require_subcommand(1);

    CommonFlags simulate_flags, sweep_flags, tune_flags, expansion_flags,
        prepare_flags;
    bool emit_data = false;

    CLI::App* simulate = app.add_subcommand(
        "simulate", "propagate scores on one dataset, emit score/label/metric CSVs");
    simulate_flags.attach(simulate);
    CLI::App* sweep = app.add_subcommand(
        "sweep-alpha", "empirical vs predicted accuracy over an alpha grid");
    sweep_flags.attach(sweep);
    CLI::App* tune = app.add_subcommand(
        "tune", "balance-point estimation and precision comparison");
    tune_flags.attach(tune);
    CLI::App* expansion = app.add_subcommand(
        "expansion-check", "kernel-matrix expansion norm decay table");
    expansion_flags.attach(expansion);
    CLI::App* prepare = app.add_subcommand(
        "mnist-prepare", "select and record an IDX subset (manifest + selection)");
    prepare_flags.attach(prepare);
    prepare->add_flag("--emit-data", emit_data, "also write the scaled pixel rows");

    // CLI11 parses from argv-style reversed vectors.
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    }

    try {
        if (simulate->parsed())
            report_written(cmd_simulate(simulate_flags.load()));
        else if (sweep->parsed())
            report_written(cmd_sweep_alpha(sweep_flags.load()));
        else if (tune->parsed())
            report_written(cmd_tune(tune_flags.load()));
        else if (expansion->parsed())
            report_written(cmd_expansion_check(expansion_flags.load()));
        else if (prepare->parsed())
            report_written(cmd_mnist_prepare(prepare_flags.load(), emit_data));
    } catch (const input_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}

} // namespace gssl

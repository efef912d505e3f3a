#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gssl/gmm.hpp"
#include "gssl/kernel.hpp"
#include "gssl/types.hpp"

namespace gssl {

/// Kernel named in configs as "gaussian{sigma2}" or "quad{f0,f1,f2}".
/// Quadratic kernels are anchored at tau_hat, resolved from the dataset
/// at run time.
struct KernelConfig {
    enum class Type { gaussian, quadratic };
    Type type = Type::gaussian;
    double sigma2 = 1.0;
    double f0 = 1.0, f1 = 0.0, f2 = 1.0;

    bool needs_tau() const { return type == Type::quadratic; }
    KernelSpec make(double tau_hat) const;
    std::string to_string() const;
    static KernelConfig parse(const std::string& text);
};

struct DatasetConfig {
    std::optional<BuiltinModel> builtin;
    Index p = 0;
    std::string idx_images;
    std::string idx_labels;
    std::vector<int> classes;

    bool is_builtin() const { return builtin.has_value(); }
};

enum class AlphaMode { fixed_value, beta_value, algorithm1, grid };

struct AlphaConfig {
    AlphaMode mode = AlphaMode::fixed_value;
    double value = -1.0;
    double beta = 0.0;
    std::vector<double> grid;
};

struct ExperimentConfig {
    DatasetConfig dataset;
    std::vector<Index> n_l;
    std::vector<Index> n_u;
    KernelConfig kernel;
    AlphaConfig alpha;
    Index trials = 50;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    int threads = 0; // 0 = automatic

    // tune-specific: labelled imbalance sweep (n_l1 / n_l) and the oracle
    // search grid (empty skips the oracle column).
    std::vector<double> imbalance;
    std::vector<double> oracle_grid;

    // expansion-check-specific
    std::vector<Index> n_list;
    Index expansion_seeds = 5;
    double degree_sigma = -1.0;

    std::string config_hash; // filled at parse time

    ClassLayout layout() const { return ClassLayout(n_l, n_u); }

    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig from_json_file(const std::string& path);
};

/// Runs `fn(trial)` for trial = 0..trials-1 on a small worker pool.
/// Results must be stored by trial index by the callback; the schedule
/// never affects outputs.
void parallel_trials(Index trials, int threads,
                     const std::function<void(Index)>& fn);

/// Each command writes its CSV outputs under config.out_dir and returns
/// the list of file paths written.
std::vector<std::string> cmd_simulate(const ExperimentConfig& config);
std::vector<std::string> cmd_sweep_alpha(const ExperimentConfig& config);
std::vector<std::string> cmd_tune(const ExperimentConfig& config);
std::vector<std::string> cmd_expansion_check(const ExperimentConfig& config);
std::vector<std::string> cmd_mnist_prepare(const ExperimentConfig& config,
                                           bool emit_data);

} // namespace gssl

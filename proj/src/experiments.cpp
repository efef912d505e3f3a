#include "gssl/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "gssl/asymptotics.hpp"
#include "gssl/dataset.hpp"
#include "gssl/io.hpp"
#include "gssl/propagation.hpp"
#include "gssl/rng.hpp"
#include "gssl/tuning.hpp"
#include "gssl/rmt_expansion.hpp"

namespace gssl {

using nlohmann::json;

KernelSpec KernelConfig::make(double tau_hat) const {
    if (type == Type::gaussian) return gaussian_kernel(sigma2);
    return quadratic_kernel(tau_hat, f0, f1, f2);
}

std::string KernelConfig::to_string() const {
    std::ostringstream s;
    if (type == Type::gaussian)
        s << "gaussian{" << format_double(sigma2) << "}";
    else
        s << "quad{" << format_double(f0) << "," << format_double(f1) << ","
          << format_double(f2) << "}";
    return s.str();
}

KernelConfig KernelConfig::parse(const std::string& text) {
    const auto open = text.find('{');
    const auto close = text.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open)
        throw input_error("bad kernel spec (expected name{args}): " + text);
    const std::string name = text.substr(0, open);
    const std::string args = text.substr(open + 1, close - open - 1);
    std::vector<double> values;
    std::stringstream ss(args);
    std::string item;
    while (std::getline(ss, item, ','))
        values.push_back(std::stod(item));
    KernelConfig k;
    if (name == "gaussian") {
        if (values.size() != 1)
            throw input_error("gaussian kernel needs one parameter: " + text);
        k.type = Type::gaussian;
        k.sigma2 = values[0];
        if (!(k.sigma2 > 0)) throw input_error("gaussian kernel needs sigma2 > 0");
    } else if (name == "quad") {
        if (values.size() != 3)
            throw input_error("quad kernel needs three parameters: " + text);
        k.type = Type::quadratic;
        k.f0 = values[0];
        k.f1 = values[1];
        k.f2 = values[2];
    } else {
        throw input_error("unknown kernel name: " + name);
    }
    return k;
}

namespace {

std::vector<Index> index_list(const json& j) {
    std::vector<Index> out;
    for (const auto& v : j) out.push_back(v.get<Index>());
    return out;
}

} // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw input_error(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig cfg;
    try {
        const json& ds = j.at("dataset");
        if (ds.contains("builtin")) {
            cfg.dataset.builtin =
                builtin_model_from_name(ds.at("builtin").get<std::string>());
            cfg.dataset.p = ds.at("p").get<Index>();
        } else {
            cfg.dataset.idx_images = ds.at("images").get<std::string>();
            cfg.dataset.idx_labels = ds.at("labels").get<std::string>();
            cfg.dataset.classes = ds.at("classes").get<std::vector<int>>();
        }
        const json& lay = j.at("layout");
        cfg.n_l = index_list(lay.at("n_l"));
        cfg.n_u = index_list(lay.at("n_u"));
        cfg.kernel = KernelConfig::parse(j.at("kernel").get<std::string>());

        if (j.contains("alpha")) {
            const json& a = j.at("alpha");
            if (a.is_number()) {
                cfg.alpha.mode = AlphaMode::fixed_value;
                cfg.alpha.value = a.get<double>();
            } else if (a.is_string()) {
                if (a.get<std::string>() != "algorithm1")
                    throw input_error("alpha string must be \"algorithm1\"");
                cfg.alpha.mode = AlphaMode::algorithm1;
            } else if (a.contains("value")) {
                cfg.alpha.mode = AlphaMode::fixed_value;
                cfg.alpha.value = a.at("value").get<double>();
            } else if (a.contains("beta")) {
                cfg.alpha.mode = AlphaMode::beta_value;
                cfg.alpha.beta = a.at("beta").get<double>();
            } else if (a.contains("grid")) {
                cfg.alpha.mode = AlphaMode::grid;
                cfg.alpha.grid = a.at("grid").get<std::vector<double>>();
                if (cfg.alpha.grid.empty()) throw input_error("empty alpha grid");
            } else {
                throw input_error("unrecognized alpha specification");
            }
        }
        if (j.contains("trials")) cfg.trials = j.at("trials").get<Index>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();
        if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
        if (j.contains("imbalance"))
            cfg.imbalance = j.at("imbalance").get<std::vector<double>>();
        if (j.contains("oracle_grid"))
            cfg.oracle_grid = j.at("oracle_grid").get<std::vector<double>>();
        if (j.contains("n_list")) cfg.n_list = index_list(j.at("n_list"));
        if (j.contains("expansion_seeds"))
            cfg.expansion_seeds = j.at("expansion_seeds").get<Index>();
        if (j.contains("degree_sigma"))
            cfg.degree_sigma = j.at("degree_sigma").get<double>();
    } catch (const json::exception& e) {
        throw input_error(std::string("bad config: ") + e.what());
    }
    if (cfg.trials < 1) throw input_error("trials must be positive");
    cfg.layout(); // validate counts now
    cfg.config_hash = [&] {
        std::ostringstream h;
        h << std::hex << fnv1a_hash(j.dump());
        return h.str();
    }();
    return cfg;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

void parallel_trials(Index trials, int threads, const std::function<void(Index)>& fn) {
    int workers = threads > 0 ? threads
                              : static_cast<int>(std::min(
                                    4u, std::max(1u, std::thread::hardware_concurrency())));
    workers = static_cast<int>(std::min<Index>(workers, trials));
    if (workers <= 1) {
        for (Index t = 0; t < trials; ++t) fn(t);
        return;
    }
    std::atomic<Index> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        while (true) {
            const Index t = next.fetch_add(1);
            if (t >= trials) return;
            try {
                fn(t);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

namespace {

namespace fs = std::filesystem;

std::string join_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void ensure_out_dir(const ExperimentConfig& cfg) {
    if (!cfg.out_dir.empty()) fs::create_directories(cfg.out_dir);
}

void stamp(CsvWriter& csv, const ExperimentConfig& cfg, const std::string& command) {
    std::ostringstream line;
    line << "command=" << command << " config_hash=" << cfg.config_hash
         << " seed=" << cfg.seed << " trials=" << cfg.trials;
    csv.comment(line.str());
}

/// File-name-safe tag for an alpha value: '-' -> 'm', '.' -> '_'.
std::string alpha_tag(double alpha) {
    std::string s = format_double(alpha);
    for (char& c : s) {
        if (c == '-') c = 'm';
        if (c == '.') c = '_';
    }
    return s;
}

struct DatasetSource {
    const ExperimentConfig& cfg;
    std::optional<MixtureModel> model;

    explicit DatasetSource(const ExperimentConfig& config) : cfg(config) {
        if (cfg.dataset.is_builtin())
            model = builtin_model(*cfg.dataset.builtin, cfg.dataset.p);
    }

    LabelledSplit make(const ClassLayout& layout, std::uint64_t trial_seed) const {
        if (model) return sample(*model, layout, trial_seed);
        return ingest_idx(cfg.dataset.idx_images, cfg.dataset.idx_labels,
                          cfg.dataset.classes, layout, trial_seed)
            .split;
    }
};

double tau_from_distances(const MatrixXd& D2) {
    const Index n = D2.rows();
    const double total = D2.sum(); // diagonal is exactly zero
    return total / (static_cast<double>(n) * static_cast<double>(n - 1));
}

struct SummaryStat {
    double sum = 0.0;
    double sumsq = 0.0;
    Index count = 0;

    void add(double v) {
        sum += v;
        sumsq += v * v;
        ++count;
    }
    double mean() const { return count ? sum / count : std::nan(""); }
    double stderr_mean() const {
        if (count < 2) return 0.0;
        const double m = mean();
        const double var = (sumsq - count * m * m) / (count - 1);
        return std::sqrt(std::max(var, 0.0) / count);
    }
};

} // namespace

std::vector<std::string> cmd_simulate(const ExperimentConfig& cfg) {
    ensure_out_dir(cfg);
    const ClassLayout layout = cfg.layout();
    const DatasetSource source(cfg);
    const int K = layout.num_classes();
    const double sqrtp = cfg.dataset.is_builtin()
                             ? std::sqrt(static_cast<double>(cfg.dataset.p))
                             : 0.0;

    struct AlphaJob {
        std::string tag;
        bool use_algorithm1;
        double alpha; // ignored for algorithm1
    };
    std::vector<AlphaJob> jobs;
    switch (cfg.alpha.mode) {
        case AlphaMode::fixed_value:
            jobs.push_back({alpha_tag(cfg.alpha.value), false, cfg.alpha.value});
            break;
        case AlphaMode::beta_value: {
            if (!cfg.dataset.is_builtin())
                throw input_error("beta alpha mode needs a builtin dataset (known p)");
            const double a = -1.0 + cfg.alpha.beta / sqrtp;
            jobs.push_back({alpha_tag(a), false, a});
            break;
        }
        case AlphaMode::algorithm1:
            jobs.push_back({"hat0", true, -1.0});
            break;
        case AlphaMode::grid:
            for (double a : cfg.alpha.grid) jobs.push_back({alpha_tag(a), false, a});
            break;
    }

    struct TrialOut {
        Metrics raw;
        Metrics norm;
        double alpha_used;
    };

    std::vector<std::string> written;
    for (const AlphaJob& job : jobs) {
        std::vector<TrialOut> results(cfg.trials);
        MatrixXd scatter_raw, scatter_norm; // trial 0 centered scores
        std::vector<int> truth = layout.unlabelled_truth();

        parallel_trials(cfg.trials, cfg.threads, [&](Index t) {
            const LabelledSplit split =
                source.make(layout, derive_seed(cfg.seed, 0, t));
            const MatrixXd D2 = squared_distance_matrix(split.X);
            const KernelSpec kernel = cfg.kernel.make(tau_from_distances(D2));
            const MatrixXd W = weight_matrix_from_distances(D2, kernel);
            const VectorXd d = degree_vector(W);
            double alpha = job.alpha;
            if (job.use_algorithm1)
                alpha = estimate_beta0(split, kernel).alpha;
            const ScoreMatrix scores = solve_closed_form(W, d, layout, alpha);
            const MatrixXd raw_u = scores.unlabelled_block();
            const MatrixXd norm_u = normalize_scores(scores);
            TrialOut& out = results[t];
            out.alpha_used = alpha;
            out.raw = metrics(classify(raw_u), truth, K);
            out.norm = metrics(classify(norm_u), truth, K);
            if (t == 0) {
                scatter_raw = center_scores(raw_u);
                scatter_norm = center_scores(norm_u);
            }
        });

        const std::string scores_path =
            join_path(cfg.out_dir, "scores_alpha_" + job.tag + ".csv");
        {
            CsvWriter csv(scores_path);
            stamp(csv, cfg, "simulate");
            std::vector<std::string> cols = {"node_index", "true_class"};
            for (int k = 1; k <= K; ++k) cols.push_back("f_centered_" + std::to_string(k));
            for (int k = 1; k <= K; ++k)
                cols.push_back("fhat_centered_" + std::to_string(k));
            csv.header(cols);
            for (Index i = 0; i < scatter_raw.rows(); ++i) {
                auto row = csv.row();
                row.add(static_cast<std::int64_t>(layout.labelled_total() + i));
                row.add(static_cast<std::int64_t>(truth[i] + 1));
                for (int k = 0; k < K; ++k) row.add(scatter_raw(i, k));
                for (int k = 0; k < K; ++k) row.add(scatter_norm(i, k));
            }
        }
        written.push_back(scores_path);

        const std::string labels_path =
            join_path(cfg.out_dir, "labels_alpha_" + job.tag + ".csv");
        {
            // Predictions for the trial-0 dataset, raw and normalized rule.
            CsvWriter csv(labels_path);
            stamp(csv, cfg, "simulate");
            csv.header({"node_index", "true_class", "predicted_raw",
                        "predicted_normalized"});
            const std::vector<int> pred_raw = classify(scatter_raw);
            const std::vector<int> pred_norm = classify(scatter_norm);
            for (Index i = 0; i < scatter_raw.rows(); ++i) {
                csv.row()
                    .add(static_cast<std::int64_t>(layout.labelled_total() + i))
                    .add(static_cast<std::int64_t>(truth[i] + 1))
                    .add(static_cast<std::int64_t>(pred_raw[i] + 1))
                    .add(static_cast<std::int64_t>(pred_norm[i] + 1));
            }
        }
        written.push_back(labels_path);

        const std::string metrics_path =
            join_path(cfg.out_dir, "metrics_alpha_" + job.tag + ".csv");
        {
            CsvWriter csv(metrics_path);
            stamp(csv, cfg, "simulate");
            std::vector<std::string> cols = {"trial", "alpha", "accuracy_raw",
                                             "accuracy_normalized",
                                             "avg_precision_normalized"};
            for (int k = 1; k <= K; ++k) cols.push_back("precision_" + std::to_string(k));
            for (int k = 1; k <= K; ++k) cols.push_back("recall_" + std::to_string(k));
            csv.header(cols);
            SummaryStat acc_raw, acc_norm, avg_prec;
            for (Index t = 0; t < cfg.trials; ++t) {
                const TrialOut& out = results[t];
                auto row = csv.row();
                row.add(static_cast<std::int64_t>(t));
                row.add(out.alpha_used);
                row.add(out.raw.accuracy);
                row.add(out.norm.accuracy);
                row.add(out.norm.average_precision);
                for (int k = 0; k < K; ++k) row.add(out.norm.precision(k));
                for (int k = 0; k < K; ++k) row.add(out.norm.recall(k));
                acc_raw.add(out.raw.accuracy);
                acc_norm.add(out.norm.accuracy);
                avg_prec.add(out.norm.average_precision);
            }
            std::ostringstream summary;
            summary << "mean accuracy_raw=" << format_double(acc_raw.mean())
                    << " accuracy_normalized=" << format_double(acc_norm.mean())
                    << " avg_precision_normalized=" << format_double(avg_prec.mean())
                    << " stderr_accuracy_normalized="
                    << format_double(acc_norm.stderr_mean());
            csv.comment(summary.str());
        }
        written.push_back(metrics_path);
    }
    return written;
}

std::vector<std::string> cmd_sweep_alpha(const ExperimentConfig& cfg) {
    ensure_out_dir(cfg);
    const ClassLayout layout = cfg.layout();
    const DatasetSource source(cfg);
    const int K = layout.num_classes();

    std::vector<double> grid;
    if (cfg.alpha.mode == AlphaMode::grid)
        grid = cfg.alpha.grid;
    else if (cfg.alpha.mode == AlphaMode::fixed_value)
        grid = {cfg.alpha.value};
    else
        throw input_error("sweep-alpha needs an alpha grid or fixed value");

    // Theory column: population statistics from the model, or from the
    // full-file class moments when the dataset is an IDX pair.
    PopulationStats stats;
    Index p;
    if (cfg.dataset.is_builtin()) {
        stats = population_stats(*source.model, layout);
        p = cfg.dataset.p;
    } else {
        const IdxClassMoments moments = idx_class_moments(
            cfg.dataset.idx_images, cfg.dataset.idx_labels, cfg.dataset.classes);
        stats = population_stats_from_moments(moments.means, moments.covariances,
                                              layout);
        p = moments.means[0].size();
    }
    const KernelSpec theory_kernel = cfg.kernel.make(stats.tau);

    struct GridAccum {
        SummaryStat acc;
        std::vector<SummaryStat> per_class;
    };
    std::vector<GridAccum> accum(grid.size());
    for (auto& a : accum) a.per_class.resize(K);
    std::mutex accum_mutex;
    const std::vector<int> truth = layout.unlabelled_truth();

    parallel_trials(cfg.trials, cfg.threads, [&](Index t) {
        const LabelledSplit split = source.make(layout, derive_seed(cfg.seed, 0, t));
        const MatrixXd D2 = squared_distance_matrix(split.X);
        const KernelSpec kernel = cfg.kernel.make(tau_from_distances(D2));
        const MatrixXd W = weight_matrix_from_distances(D2, kernel);
        const VectorXd d = degree_vector(W);
        std::vector<double> acc(grid.size());
        std::vector<VectorXd> rec(grid.size());
        for (std::size_t gi = 0; gi < grid.size(); ++gi) {
            const ScoreMatrix scores = solve_closed_form(W, d, layout, grid[gi]);
            const Metrics m = metrics(classify(normalize_scores(scores)), truth, K);
            acc[gi] = m.accuracy;
            rec[gi] = m.recall;
        }
        std::lock_guard<std::mutex> lock(accum_mutex);
        for (std::size_t gi = 0; gi < grid.size(); ++gi) {
            accum[gi].acc.add(acc[gi]);
            for (int k = 0; k < K; ++k) accum[gi].per_class[k].add(rec[gi](k));
        }
    });

    const std::string path = join_path(cfg.out_dir, "sweep_alpha.csv");
    CsvWriter csv(path);
    stamp(csv, cfg, "sweep-alpha");
    std::vector<std::string> cols = {"alpha", "empirical_accuracy",
                                     "empirical_stderr", "theory_accuracy"};
    for (int k = 1; k <= K; ++k) cols.push_back("empirical_acc_" + std::to_string(k));
    for (int k = 1; k <= K; ++k) cols.push_back("theory_acc_" + std::to_string(k));
    cols.push_back("trials");
    csv.header(cols);

    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        TheoryInputs inputs{stats, layout, p,
                            theory_kernel.f(stats.tau), theory_kernel.df(stats.tau),
                            theory_kernel.d2f(stats.tau)};
        inputs.alpha = grid[gi];
        inputs.beta =
            (grid[gi] + 1.0) * std::sqrt(static_cast<double>(p));
        VectorXd theory_acc(K);
        if (K == 2) {
            const GaussianScoreLaw law1 = law_general(inputs, 0, LawVariant::unconditional);
            const GaussianScoreLaw law2 = law_general(inputs, 1, LawVariant::unconditional);
            theory_acc(0) = std_normal_cdf(theta(law1, 1));
            theory_acc(1) = std_normal_cdf(theta(law2, 0));
        } else {
            std::vector<GaussianScoreLaw> laws;
            for (int b = 0; b < K; ++b)
                laws.push_back(law_general(inputs, b, LawVariant::unconditional));
            theory_acc =
                accuracy_multiclass(laws, 200000, derive_seed(cfg.seed, 99, gi))
                    .probability;
        }
        double theory_mean = 0.0;
        for (int k = 0; k < K; ++k)
            theory_mean += layout.c_uk(k) / layout.c_u() * theory_acc(k);

        auto row = csv.row();
        row.add(grid[gi]);
        row.add(accum[gi].acc.mean());
        row.add(accum[gi].acc.stderr_mean());
        row.add(theory_mean);
        for (int k = 0; k < K; ++k) row.add(accum[gi].per_class[k].mean());
        for (int k = 0; k < K; ++k) row.add(theory_acc(k));
        row.add(static_cast<std::int64_t>(accum[gi].acc.count));
    }
    return {path};
}

std::vector<std::string> cmd_tune(const ExperimentConfig& cfg) {
    ensure_out_dir(cfg);
    const ClassLayout base_layout = cfg.layout();
    if (base_layout.num_classes() != 2)
        throw input_error("tune needs exactly two classes");
    const DatasetSource source(cfg);

    std::vector<double> levels = cfg.imbalance;
    if (levels.empty())
        levels = {static_cast<double>(base_layout.labelled(0)) /
                  base_layout.labelled_total()};

    struct TrialRow {
        TuningResult tuning;
        double precision_pagerank;
        double precision_tuned;
        double precision_oracle;
        double alpha_star;
        std::vector<double> oracle_curve; // per oracle_grid entry
    };

    const std::string trials_path = join_path(cfg.out_dir, "tune_trials.csv");
    const std::string summary_path = join_path(cfg.out_dir, "tune_summary.csv");
    CsvWriter trials_csv(trials_path);
    stamp(trials_csv, cfg, "tune");
    trials_csv.header({"c_l1", "trial", "tau_hat", "delta_t_hat", "J", "J_prime",
                       "beta_hat", "alpha_hat", "precision_pagerank",
                       "precision_tuned", "precision_oracle", "alpha_star"});
    CsvWriter summary_csv(summary_path);
    stamp(summary_csv, cfg, "tune");
    summary_csv.header({"c_l1", "n_l1", "n_l2", "mean_alpha_hat",
                        "mean_precision_pagerank", "stderr_pagerank",
                        "mean_precision_tuned", "stderr_tuned",
                        "mean_precision_oracle", "stderr_oracle", "trials"});
    std::vector<std::string> written_curves;

    for (std::size_t li = 0; li < levels.size(); ++li) {
        const Index nl_total = base_layout.labelled_total();
        Index nl1 = static_cast<Index>(std::llround(levels[li] * nl_total));
        nl1 = std::max<Index>(2, std::min<Index>(nl1, nl_total - 2));
        const ClassLayout layout({nl1, nl_total - nl1},
                                 {base_layout.unlabelled(0), base_layout.unlabelled(1)});
        const std::vector<int> truth = layout.unlabelled_truth();

        std::vector<TrialRow> rows(cfg.trials);
        parallel_trials(cfg.trials, cfg.threads, [&](Index t) {
            const LabelledSplit split =
                source.make(layout, derive_seed(cfg.seed, li + 1, t));
            const MatrixXd D2 = squared_distance_matrix(split.X);
            const KernelSpec kernel = cfg.kernel.make(tau_from_distances(D2));
            const MatrixXd W = weight_matrix_from_distances(D2, kernel);
            const VectorXd d = degree_vector(W);

            TrialRow& row = rows[t];
            row.tuning = estimate_beta0(split, kernel);

            auto precision_at = [&](double alpha) {
                const ScoreMatrix scores = solve_closed_form(W, d, layout, alpha);
                return metrics(classify(normalize_scores(scores)), truth, 2)
                    .average_precision;
            };
            row.precision_pagerank = precision_at(-1.0);
            row.precision_tuned = precision_at(row.tuning.alpha);
            row.precision_oracle = std::nan("");
            row.alpha_star = std::nan("");
            if (!cfg.oracle_grid.empty()) {
                double best = -1.0;
                double best_alpha = 0.0;
                for (double a : cfg.oracle_grid) {
                    const double prec = precision_at(a);
                    row.oracle_curve.push_back(prec);
                    if (prec > best || (prec == best && a < best_alpha)) {
                        best = prec;
                        best_alpha = a;
                    }
                }
                row.precision_oracle = best;
                row.alpha_star = best_alpha;
            }
        });

        SummaryStat alpha_hat, prec_pr, prec_tuned, prec_oracle;
        for (Index t = 0; t < cfg.trials; ++t) {
            const TrialRow& row = rows[t];
            trials_csv.row()
                .add(levels[li])
                .add(static_cast<std::int64_t>(t))
                .add(row.tuning.diagnostics.tau_hat)
                .add(row.tuning.diagnostics.delta_t_hat)
                .add(row.tuning.diagnostics.J)
                .add(row.tuning.diagnostics.J_prime)
                .add(row.tuning.beta)
                .add(row.tuning.alpha)
                .add(row.precision_pagerank)
                .add(row.precision_tuned)
                .add(row.precision_oracle)
                .add(row.alpha_star);
            alpha_hat.add(row.tuning.alpha);
            prec_pr.add(row.precision_pagerank);
            prec_tuned.add(row.precision_tuned);
            if (!std::isnan(row.precision_oracle)) prec_oracle.add(row.precision_oracle);
        }
        summary_csv.row()
            .add(levels[li])
            .add(static_cast<std::int64_t>(layout.labelled(0)))
            .add(static_cast<std::int64_t>(layout.labelled(1)))
            .add(alpha_hat.mean())
            .add(prec_pr.mean())
            .add(prec_pr.stderr_mean())
            .add(prec_tuned.mean())
            .add(prec_tuned.stderr_mean())
            .add(prec_oracle.count ? prec_oracle.mean() : std::nan(""))
            .add(prec_oracle.count ? prec_oracle.stderr_mean() : std::nan(""))
            .add(static_cast<std::int64_t>(cfg.trials));

        if (!cfg.oracle_grid.empty()) {
            AlphaStarResult curve;
            curve.alpha_star = cfg.oracle_grid[0];
            double best = -1.0;
            for (std::size_t gi = 0; gi < cfg.oracle_grid.size(); ++gi) {
                SummaryStat stat;
                for (Index t = 0; t < cfg.trials; ++t)
                    stat.add(rows[t].oracle_curve[gi]);
                curve.alpha.push_back(cfg.oracle_grid[gi]);
                curve.mean_avg_precision.push_back(stat.mean());
                curve.std_error.push_back(stat.stderr_mean());
                curve.trials_used.push_back(stat.count);
                if (stat.mean() > best) {
                    best = stat.mean();
                    curve.alpha_star = cfg.oracle_grid[gi];
                }
            }
            const std::string curve_path = join_path(
                cfg.out_dir, "oracle_curve_cl1_" + alpha_tag(levels[li]) + ".csv");
            write_precision_curve_csv(curve_path, curve);
            written_curves.push_back(curve_path);
        }
    }
    std::vector<std::string> files{trials_path, summary_path};
    files.insert(files.end(), written_curves.begin(), written_curves.end());
    return files;
}

std::vector<std::string> cmd_expansion_check(const ExperimentConfig& cfg) {
    ensure_out_dir(cfg);
    if (!cfg.dataset.is_builtin())
        throw input_error("expansion-check needs a builtin model");
    if (cfg.n_list.empty())
        throw input_error("expansion-check needs a nonempty n_list");
    const ClassLayout base = cfg.layout();
    const Index base_n = base.total();
    const double c0 = static_cast<double>(cfg.dataset.p) / base_n;
    const BuiltinModel which = *cfg.dataset.builtin;

    auto layout_factory = [&](Index n) {
        const double factor = static_cast<double>(n) / base_n;
        std::vector<Index> nl, nu;
        Index total = 0;
        for (int k = 0; k < base.num_classes(); ++k) {
            nl.push_back(std::max<Index>(
                1, static_cast<Index>(std::llround(base.labelled(k) * factor))));
            nu.push_back(std::max<Index>(
                1, static_cast<Index>(std::llround(base.unlabelled(k) * factor))));
            total += nl.back() + nu.back();
        }
        nu.back() += n - total; // absorb rounding drift into the last class
        return ClassLayout(nl, nu);
    };
    auto model_factory = [&](Index p) { return builtin_model(which, p); };
    auto kernel_factory = [&](double tau) { return cfg.kernel.make(tau); };

    std::vector<std::uint64_t> seeds;
    for (Index i = 0; i < cfg.expansion_seeds; ++i)
        seeds.push_back(derive_seed(cfg.seed, 7, i));

    const DecayTable table = residual_decay(model_factory, layout_factory,
                                            kernel_factory, c0, cfg.n_list, seeds);

    const std::string path = join_path(cfg.out_dir, "expansion_decay.csv");
    CsvWriter csv(path);
    stamp(csv, cfg, "expansion-check");
    csv.header({"n", "norm_Wn", "norm_Wsqrt", "norm_Wone", "norm_residual"});
    for (const DecayRow& row : table.rows) {
        csv.row()
            .add(static_cast<std::int64_t>(row.n))
            .add(row.norm_leading)
            .add(row.norm_sqrt)
            .add(row.norm_one)
            .add(row.norm_residual);
    }
    std::ostringstream footer;
    footer << "residual_loglog_slope=" << format_double(table.residual_slope);
    csv.comment(footer.str());
    return {path};
}

std::vector<std::string> cmd_mnist_prepare(const ExperimentConfig& cfg,
                                           bool emit_data) {
    ensure_out_dir(cfg);
    if (cfg.dataset.is_builtin())
        throw input_error("mnist-prepare needs an IDX dataset");
    const ClassLayout layout = cfg.layout();
    const IngestResult result =
        ingest_idx(cfg.dataset.idx_images, cfg.dataset.idx_labels,
                   cfg.dataset.classes, layout, cfg.seed);

    std::vector<std::string> written;
    const std::string manifest_path = join_path(cfg.out_dir, "manifest.json");
    {
        std::ofstream out(manifest_path);
        if (!out) throw input_error("cannot open output file: " + manifest_path);
        out << manifest_to_json(result.manifest) << '\n';
    }
    written.push_back(manifest_path);

    const std::string selection_path = join_path(cfg.out_dir, "selection.csv");
    {
        CsvWriter csv(selection_path);
        stamp(csv, cfg, "mnist-prepare");
        csv.header({"split_row", "source_row", "class_index", "class_value",
                    "labelled"});
        for (Index i = 0; i < layout.total(); ++i) {
            const int k = layout.class_of_row(i);
            csv.row()
                .add(static_cast<std::int64_t>(i))
                .add(static_cast<std::int64_t>(result.manifest.selected_rows[i]))
                .add(static_cast<std::int64_t>(k + 1))
                .add(static_cast<std::int64_t>(cfg.dataset.classes[k]))
                .add(static_cast<std::int64_t>(i < layout.labelled_total() ? 1 : 0));
        }
    }
    written.push_back(selection_path);

    if (emit_data) {
        const std::string data_path = join_path(cfg.out_dir, "data.csv");
        CsvWriter csv(data_path);
        stamp(csv, cfg, "mnist-prepare");
        std::vector<std::string> cols = {"split_row"};
        for (Index j = 0; j < result.split.p(); ++j)
            cols.push_back("x" + std::to_string(j));
        csv.header(cols);
        for (Index i = 0; i < result.split.n(); ++i) {
            auto row = csv.row();
            row.add(static_cast<std::int64_t>(i));
            for (Index j = 0; j < result.split.p(); ++j) row.add(result.split.X(i, j));
        }
        written.push_back(data_path);
    }
    return written;
}

} // namespace gssl

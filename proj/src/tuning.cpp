#include "gssl/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gssl/io.hpp"
#include "gssl/rng.hpp"

namespace gssl {

double beta0_exact(const PopulationStats& stats, const ClassLayout& layout,
                   double f, double df, double d2f, Index p) {
    if (layout.num_classes() != 2)
        throw std::invalid_argument("beta0_exact: only defined for two classes");
    if (d2f == 0.0)
        throw std::invalid_argument("beta0_exact: f''(tau) must be nonzero");
    if (df == 0.0)
        throw std::invalid_argument("beta0_exact: f'(tau) must be nonzero");
    const double t_gap = stats.t(0) - stats.t(1);
    if (t_gap == 0.0)
        throw balance_error("beta0_exact: t1 == t2, balance point undefined");

    const double r1 = df / f;
    const double r2 = d2f / f;
    const double curv = r2 - r1 * r1;
    const double mu_dist2 = (stats.mu_circ[0] - stats.mu_circ[1]).squaredNorm();
    const double delta_m = -2.0 * r1 * mu_dist2 + curv * t_gap * t_gap +
                           2.0 * r2 * (stats.T(0, 0) + stats.T(1, 1) -
                                       2.0 * stats.T(0, 1));
    const double cl_gap = layout.c_lk(0) - layout.c_lk(1);
    // Balance of the two mean gaps: each gap moves by
    // (beta / c_l)(f'/f)(t1 - t2) with opposite signs, so the prefactor is
    // f / (2 f'), not f / f''; the post-hoc check below enforces it.
    const double beta0 = (f / (2.0 * df)) * (cl_gap / t_gap) * delta_m;

    TheoryInputs in{stats, layout, p, f, df, d2f};
    in.beta = beta0;
    in.alpha = -1.0 + beta0 / std::sqrt(static_cast<double>(p));
    const GaussianScoreLaw law1 = law_critical_scaling(in, 0);
    const GaussianScoreLaw law2 = law_critical_scaling(in, 1);
    const double residual =
        (law1.m(0) - law1.m(1)) - (law2.m(1) - law2.m(0));
    if (std::abs(residual) > 1e-8) {
        std::ostringstream msg;
        msg << "beta0_exact: balance verification failed, residual " << residual;
        throw numeric_error(msg.str());
    }
    return beta0;
}

double beta0_exact_from_model(const MixtureModel& model, const ClassLayout& layout,
                              const KernelSpec& kernel) {
    const PopulationStats stats = population_stats(model, layout);
    return beta0_exact(stats, layout, kernel.f(stats.tau), kernel.df(stats.tau),
                       kernel.d2f(stats.tau), model.dim());
}

namespace {

double score_gap_sum(const ScoreMatrix& scores,
                     const std::vector<Index>& rows_in_solution, double p) {
    const MatrixXd Fhat = normalize_scores(scores);
    const Index nl = scores.layout.labelled_total();
    double sum = 0.0;
    for (Index r : rows_in_solution) sum += Fhat(r - nl, 0) - Fhat(r - nl, 1);
    return p * sum;
}

} // namespace

TuningResult estimate_beta0(const LabelledSplit& split, const KernelSpec& kernel,
                            const EstimateBeta0Options& opts) {
    const ClassLayout& layout = split.layout;
    if (layout.num_classes() != 2)
        throw std::invalid_argument("estimate_beta0: only defined for two classes");
    for (int k = 0; k < 2; ++k)
        if (layout.labelled(k) < 2)
            throw std::invalid_argument(
                "estimate_beta0: each labelled class needs at least two samples");

    TuningResult result;
    TuningDiagnostics& diag = result.diagnostics;
    const double p = static_cast<double>(split.p());

    diag.tau_hat = estimate_tau(split);
    diag.delta_t_hat = estimate_delta_t(split);
    if (std::abs(diag.delta_t_hat) < 1e-6 * diag.tau_hat)
        throw ill_conditioned_error(
            "estimate_beta0: delta_t estimate too small relative to tau");
    const double f = kernel.f(diag.tau_hat);
    const double df = kernel.df(diag.tau_hat);
    if (df == 0.0)
        throw std::invalid_argument("estimate_beta0: f'(tau) must be nonzero");

    // Step 3: PageRank run on the full problem.
    const MatrixXd W = weight_matrix(split, kernel);
    {
        const VectorXd d = degree_vector(W);
        const ScoreMatrix scores = solve_closed_form(W, d, layout, -1.0);
        std::vector<Index> unlabelled(layout.unlabelled_total());
        const Index nl = layout.labelled_total();
        for (Index i = 0; i < layout.unlabelled_total(); ++i) unlabelled[i] = nl + i;
        diag.J = score_gap_sum(scores, unlabelled, p);
    }

    // Step 4: truncate each labelled class to its first m samples (stored
    // order); the dropped rows leave the problem, or join the unlabelled
    // set when requested. Pairwise distances are unchanged, so the reduced
    // weight matrix is a slice of W.
    const Index m = std::min(layout.labelled(0), layout.labelled(1));
    std::vector<Index> keep;  // rows of the reduced problem, in block order
    for (int k = 0; k < 2; ++k)
        for (Index i = 0; i < m; ++i) keep.push_back(layout.labelled_offset(k) + i);
    std::vector<Index> dropped[2];
    for (int k = 0; k < 2; ++k)
        for (Index i = m; i < layout.labelled(k); ++i)
            dropped[k].push_back(layout.labelled_offset(k) + i);

    std::vector<Index> unlabelled_rows[2]; // per class, reduced problem order
    for (int k = 0; k < 2; ++k) {
        if (opts.include_dropped_in_j_prime)
            unlabelled_rows[k] = dropped[k];
        for (Index i = 0; i < layout.unlabelled(k); ++i)
            unlabelled_rows[k].push_back(layout.unlabelled_offset(k) + i);
    }

    std::vector<Index> rows = keep;
    for (int k = 0; k < 2; ++k)
        rows.insert(rows.end(), unlabelled_rows[k].begin(), unlabelled_rows[k].end());
    ClassLayout reduced({m, m}, {static_cast<Index>(unlabelled_rows[0].size()),
                                 static_cast<Index>(unlabelled_rows[1].size())});

    MatrixXd Wr(rows.size(), rows.size());
    for (std::size_t j = 0; j < rows.size(); ++j)
        for (std::size_t i = 0; i < rows.size(); ++i)
            Wr(i, j) = W(rows[i], rows[j]);
    const VectorXd dr = degree_vector(Wr);
    const ScoreMatrix scores_r = solve_closed_form(Wr, dr, reduced, -1.0);

    std::vector<Index> j_rows_reduced;
    for (std::size_t r = keep.size(); r < rows.size(); ++r)
        j_rows_reduced.push_back(static_cast<Index>(r));
    diag.J_prime = score_gap_sum(scores_r, j_rows_reduced, p);

    const double n_u = static_cast<double>(layout.unlabelled_total());
    result.beta = (layout.c_l() * f / (df * diag.delta_t_hat)) *
                  (diag.J_prime - diag.J) / n_u;
    result.alpha = -1.0 + result.beta / std::sqrt(p);
    return result;
}

namespace {

double avg_precision_at_alpha(const LabelledSplit& split, const KernelSpec& kernel,
                              double alpha) {
    const MatrixXd W = weight_matrix(split, kernel);
    const VectorXd d = degree_vector(W);
    const ScoreMatrix scores = solve_closed_form(W, d, split.layout, alpha);
    const std::vector<int> predicted = classify(normalize_scores(scores));
    return metrics(predicted, split.layout.unlabelled_truth(),
                   split.layout.num_classes())
        .average_precision;
}

AlphaStarResult finish_grid(AlphaStarResult res) {
    double best = -1.0;
    double best_alpha = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < res.alpha.size(); ++i) {
        if (res.trials_used[i] == 0) continue;
        const double v = res.mean_avg_precision[i];
        if (!any || v > best || (v == best && res.alpha[i] < best_alpha)) {
            best = v;
            best_alpha = res.alpha[i];
            any = true;
        }
    }
    if (!any) throw solver_error("alpha_star_grid: every grid point failed");
    res.alpha_star = best_alpha;
    return res;
}

} // namespace

AlphaStarResult alpha_star_grid(const MixtureModel& model, const ClassLayout& layout,
                                const KernelSpec& kernel,
                                const std::vector<double>& alpha_grid, Index trials,
                                std::uint64_t seed) {
    if (alpha_grid.empty())
        throw std::invalid_argument("alpha_star_grid: empty grid");
    if (trials < 1)
        throw std::invalid_argument("alpha_star_grid: trials must be positive");
    AlphaStarResult res;
    for (std::size_t gi = 0; gi < alpha_grid.size(); ++gi) {
        double sum = 0.0;
        double sumsq = 0.0;
        Index used = 0;
        for (Index t = 0; t < trials; ++t) {
            const LabelledSplit split =
                sample(model, layout, derive_seed(seed, gi, static_cast<std::uint64_t>(t)));
            try {
                const double ap = avg_precision_at_alpha(split, kernel, alpha_grid[gi]);
                sum += ap;
                sumsq += ap * ap;
                ++used;
            } catch (const numeric_error&) {
                // failed trial: recorded by the reduced trials_used count
            }
        }
        res.alpha.push_back(alpha_grid[gi]);
        res.trials_used.push_back(used);
        if (used > 0) {
            const double mean = sum / used;
            const double var = used > 1 ? (sumsq - used * mean * mean) / (used - 1) : 0.0;
            res.mean_avg_precision.push_back(mean);
            res.std_error.push_back(used > 1 ? std::sqrt(std::max(var, 0.0) / used)
                                             : 0.0);
        } else {
            res.mean_avg_precision.push_back(std::numeric_limits<double>::quiet_NaN());
            res.std_error.push_back(std::numeric_limits<double>::quiet_NaN());
        }
    }
    return finish_grid(std::move(res));
}

AlphaStarResult alpha_star_grid(const LabelledSplit& split, const KernelSpec& kernel,
                                const std::vector<double>& alpha_grid) {
    if (alpha_grid.empty())
        throw std::invalid_argument("alpha_star_grid: empty grid");
    AlphaStarResult res;
    const MatrixXd W = weight_matrix(split, kernel);
    const VectorXd d = degree_vector(W);
    for (double a : alpha_grid) {
        res.alpha.push_back(a);
        try {
            const ScoreMatrix scores = solve_closed_form(W, d, split.layout, a);
            const std::vector<int> predicted = classify(normalize_scores(scores));
            const double ap = metrics(predicted, split.layout.unlabelled_truth(),
                                      split.layout.num_classes())
                                  .average_precision;
            res.mean_avg_precision.push_back(ap);
            res.std_error.push_back(0.0);
            res.trials_used.push_back(1);
        } catch (const numeric_error&) {
            res.mean_avg_precision.push_back(std::numeric_limits<double>::quiet_NaN());
            res.std_error.push_back(std::numeric_limits<double>::quiet_NaN());
            res.trials_used.push_back(0);
        }
    }
    return finish_grid(std::move(res));
}

void write_precision_curve_csv(const std::string& path,
                               const AlphaStarResult& result) {
    CsvWriter csv(path);
    csv.header({"alpha", "mean_avg_precision", "stderr", "trials"});
    for (std::size_t i = 0; i < result.alpha.size(); ++i) {
        csv.row()
            .add(result.alpha[i])
            .add(result.mean_avg_precision[i])
            .add(result.std_error[i])
            .add(static_cast<std::int64_t>(result.trials_used[i]));
    }
}

} // namespace gssl

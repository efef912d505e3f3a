#include "gssl/asymptotics.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>

#include "gssl/io.hpp"
#include "gssl/rng.hpp"

namespace gssl {

namespace {

void require_f_nonzero(const TheoryInputs& in) {
    if (in.f == 0.0)
        throw std::invalid_argument("score law: kernel value f(tau) must be nonzero");
}

} // namespace

TheoryInputs TheoryInputs::from_model(const MixtureModel& model,
                                      const ClassLayout& layout,
                                      const KernelSpec& kernel, double alpha) {
    PopulationStats stats = population_stats(model, layout);
    TheoryInputs in{std::move(stats), layout, model.dim(), 0.0, 0.0, 0.0};
    in.f = kernel.f(in.stats.tau);
    in.df = kernel.df(in.stats.tau);
    in.d2f = kernel.d2f(in.stats.tau);
    in.alpha = alpha;
    in.beta = (alpha + 1.0) * std::sqrt(static_cast<double>(model.dim()));
    return in;
}

TheoryInputs TheoryInputs::from_model_beta(const MixtureModel& model,
                                           const ClassLayout& layout,
                                           const KernelSpec& kernel, double beta) {
    TheoryInputs in = from_model(model, layout, kernel, -1.0);
    in.beta = beta;
    in.alpha = -1.0 + beta / std::sqrt(static_cast<double>(model.dim()));
    return in;
}

GaussianScoreLaw law_critical_scaling(const TheoryInputs& in, int b) {
    require_f_nonzero(in);
    const PopulationStats& s = in.stats;
    const ClassLayout& lay = in.layout;
    const int K = lay.num_classes();
    const double r1 = in.df / in.f;            // f'/f
    const double r2 = in.d2f / in.f;           // f''/f
    const double curv = r2 - r1 * r1;          // f''/f - f'^2/f^2
    const double c0 = lay.c0(in.p);
    const double cl = lay.c_l();

    GaussianScoreLaw law;
    law.b = b;
    law.m.resize(K);
    for (int a = 0; a < K; ++a) {
        law.m(a) = -2.0 * r1 * s.mu_tilde_dot(a, b) +
                   curv * s.t_tilde(a) * s.t_tilde(b) + 2.0 * r2 * s.T_tilde(a, b) +
                   (in.beta / cl) * r1 * s.t(a);
    }
    law.Sigma.resize(K, K);
    for (int a1 = 0; a1 < K; ++a1)
        for (int a2 = 0; a2 < K; ++a2) {
            double v = 2.0 * curv * curv * s.T(b, b) * s.t(a1) * s.t(a2) +
                       4.0 * r1 * r1 * s.mu_cross[b](a1, a2);
            if (a1 == a2)
                v += 4.0 * r1 * r1 * c0 * s.T(b, a1) / (cl * lay.c_lk(a1));
            law.Sigma(a1, a2) = v;
        }
    return law;
}

GaussianScoreLaw law_general(const TheoryInputs& in, int b, LawVariant variant) {
    require_f_nonzero(in);
    if (variant == LawVariant::conditional && !in.labelled_spread)
        throw std::invalid_argument(
            "law_general: conditional variant requires the labelled spread vector");
    const PopulationStats& s = in.stats;
    const ClassLayout& lay = in.layout;
    const int K = lay.num_classes();
    const double alpha = in.alpha;
    const double r1 = in.df / in.f;
    const double r2 = in.d2f / in.f;
    const double curv = r2 - r1 * r1;
    const double n = static_cast<double>(lay.total());
    const double nl = static_cast<double>(lay.labelled_total());
    const double p = static_cast<double>(in.p);
    const double c0 = lay.c0(in.p);
    const double cl = lay.c_l();

    // H_ad = (f'/f) ||mu_d - mu_a||^2 + curv t_a t_d + (2 f''/f) T_ad
    MatrixXd H(K, K);
    for (int a = 0; a < K; ++a)
        for (int d = 0; d < K; ++d)
            H(a, d) = r1 * s.mu_circ_dist2(a, d) + curv * s.t(a) * s.t(d) +
                      2.0 * r2 * s.T(a, d);

    // Delta_a = sqrt(p) (f'/f) t_a
    //         + (alpha f'^2 + f f'') / (2 f^2) (2 T_aa + t_a^2)
    //         + (1/n_l) (f'/f)^2 (sum_d n_ud t_d) t_a
    double weighted_t = 0.0;
    for (int d = 0; d < K; ++d)
        weighted_t += static_cast<double>(lay.unlabelled(d)) * s.t(d);
    VectorXd Delta(K);
    for (int a = 0; a < K; ++a) {
        Delta(a) = std::sqrt(p) * r1 * s.t(a) +
                   0.5 * (alpha * r1 * r1 + r2) * (2.0 * s.T(a, a) + s.t(a) * s.t(a)) +
                   (1.0 / nl) * r1 * r1 * weighted_t * s.t(a);
    }

    GaussianScoreLaw law;
    law.b = b;
    law.m.resize(K);
    for (int a = 0; a < K; ++a) {
        double hsum = 0.0;
        for (int d = 0; d < K; ++d)
            hsum += (alpha * static_cast<double>(lay.class_total(d)) +
                     static_cast<double>(lay.unlabelled(d))) *
                    H(a, d);
        double bracket = Delta(a) - alpha * r1 * r1 * s.t(a) * s.t(b);
        if (variant == LawVariant::conditional) {
            bracket += (p / static_cast<double>(lay.labelled(a))) * r1 *
                       (*in.labelled_spread)(a);
        }
        law.m(a) = H(a, b) + hsum / nl + (1.0 + alpha) * (n / nl) * bracket;
    }

    // First covariance coefficient ((-a^2 - a) n - n_l)/n_l f'^2/f^2 + f''/f.
    const double lead =
        ((-alpha * alpha - alpha) * n - nl) / nl * r1 * r1 + r2;
    law.Sigma.resize(K, K);
    for (int a1 = 0; a1 < K; ++a1)
        for (int a2 = 0; a2 < K; ++a2) {
            double v = lead * lead * s.T(b, b) * s.t(a1) * s.t(a2) +
                       4.0 * r1 * r1 * s.mu_cross[b](a1, a2);
            if (a1 == a2) {
                v += r1 * r1 * 4.0 * c0 * s.T(b, a1) / lay.c_lk(a1);
                if (variant == LawVariant::unconditional) {
                    const double one_plus = 1.0 + alpha;
                    v += r1 * r1 * (one_plus * one_plus / (cl * cl)) * 2.0 * c0 *
                         s.T(a1, a1) / lay.c_lk(a1);
                }
            }
            law.Sigma(a1, a2) = v;
        }
    return law;
}

double theta(const GaussianScoreLaw& law, int a) {
    const int b = law.b;
    const double gap = law.m(b) - law.m(a);
    const double var =
        law.Sigma(b, b) + law.Sigma(a, a) - 2.0 * law.Sigma(a, b);
    if (var < -1e-10) {
        std::ostringstream msg;
        msg << "theta: negative variance combination " << var;
        throw numeric_error(msg.str());
    }
    if (var <= 0.0) {
        if (gap > 0.0) return std::numeric_limits<double>::infinity();
        if (gap < 0.0) return -std::numeric_limits<double>::infinity();
        return 0.0;
    }
    return gap / std::sqrt(var);
}

double std_normal_cdf(double u) {
    if (std::isnan(u)) return std::numeric_limits<double>::quiet_NaN();
    if (u == std::numeric_limits<double>::infinity()) return 1.0;
    if (u == -std::numeric_limits<double>::infinity()) return 0.0;
    return 0.5 * std::erfc(-u / std::sqrt(2.0));
}

TwoClassAccuracy accuracy_two_class(const GaussianScoreLaw& law1,
                                    const GaussianScoreLaw& law2,
                                    const ClassLayout& layout) {
    if (layout.num_classes() != 2)
        throw std::invalid_argument("accuracy_two_class: needs exactly two classes");
    TwoClassAccuracy acc;
    acc.acc1 = std_normal_cdf(theta(law1, 1));
    acc.acc2 = std_normal_cdf(theta(law2, 0));
    const double w1 = layout.c_uk(0) / layout.c_u();
    const double w2 = layout.c_uk(1) / layout.c_u();
    acc.mean = w1 * acc.acc1 + w2 * acc.acc2;
    return acc;
}

MulticlassAccuracy accuracy_multiclass(const std::vector<GaussianScoreLaw>& laws,
                                       Index trials, std::uint64_t seed) {
    if (laws.empty())
        throw std::invalid_argument("accuracy_multiclass: no laws supplied");
    if (trials < 1)
        throw std::invalid_argument("accuracy_multiclass: trials must be positive");
    const int K = static_cast<int>(laws[0].m.size());

    MulticlassAccuracy out;
    out.probability.resize(laws.size());
    out.std_error.resize(laws.size());
    for (std::size_t li = 0; li < laws.size(); ++li) {
        const GaussianScoreLaw& law = laws[li];
        MatrixXd sym = 0.5 * (law.Sigma + law.Sigma.transpose());
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym);
        const double lmax = std::max(es.eigenvalues().maxCoeff(), 0.0);
        if (es.eigenvalues().minCoeff() < -1e-10 * std::max(lmax, 1.0)) {
            std::ostringstream msg;
            msg << "accuracy_multiclass: covariance not PSD, min eigenvalue "
                << es.eigenvalues().minCoeff();
            throw numeric_error(msg.str());
        }
        const MatrixXd chol = es.eigenvectors() *
                              es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
        NormalSampler rng(derive_seed(seed, li));
        VectorXd g(K);
        Index hits = 0;
        for (Index t = 0; t < trials; ++t) {
            for (int j = 0; j < K; ++j) g(j) = rng();
            const VectorXd sample = law.m + chol * g;
            double best_other = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < K; ++a)
                if (a != law.b) best_other = std::max(best_other, sample(a));
            if (sample(law.b) > best_other) ++hits;
        }
        const double phat = static_cast<double>(hits) / static_cast<double>(trials);
        out.probability(li) = phat;
        out.std_error(li) =
            std::sqrt(phat * (1.0 - phat) / static_cast<double>(trials));
    }
    return out;
}

void write_laws_csv(const std::string& path,
                    const std::vector<GaussianScoreLaw>& laws, Index mc_trials,
                    std::uint64_t mc_seed) {
    if (laws.empty()) throw std::invalid_argument("write_laws_csv: no laws");
    const Index K = laws[0].m.size();
    CsvWriter csv(path);
    std::vector<std::string> cols = {"class"};
    for (Index k = 1; k <= K; ++k) cols.push_back("m_" + std::to_string(k));
    for (Index i = 1; i <= K; ++i)
        for (Index j = 1; j <= K; ++j)
            cols.push_back("sigma_" + std::to_string(i) + "_" + std::to_string(j));
    for (Index k = 1; k <= K; ++k) cols.push_back("theta_vs_" + std::to_string(k));
    cols.push_back("predicted_accuracy");
    csv.header(cols);

    VectorXd accuracy(laws.size());
    if (K == 2 && laws.size() == 2) {
        accuracy(0) = std_normal_cdf(theta(laws[0], 1));
        accuracy(1) = std_normal_cdf(theta(laws[1], 0));
    } else {
        accuracy = accuracy_multiclass(laws, mc_trials, mc_seed).probability;
    }
    for (std::size_t li = 0; li < laws.size(); ++li) {
        const GaussianScoreLaw& law = laws[li];
        auto row = csv.row();
        row.add(static_cast<std::int64_t>(law.b + 1));
        for (Index k = 0; k < K; ++k) row.add(law.m(k));
        for (Index i = 0; i < K; ++i)
            for (Index j = 0; j < K; ++j) row.add(law.Sigma(i, j));
        for (Index k = 0; k < K; ++k)
            row.add(k == law.b ? 0.0 : theta(law, static_cast<int>(k)));
        row.add(accuracy(li));
    }
}

} // namespace gssl

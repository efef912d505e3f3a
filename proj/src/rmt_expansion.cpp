#include "gssl/rmt_expansion.hpp"

#include <algorithm>
#include <cmath>

#include "gssl/rng.hpp"

namespace gssl {

namespace {

MatrixXd class_indicators(const ClassLayout& layout) {
    MatrixXd J = MatrixXd::Zero(layout.total(), layout.num_classes());
    for (Index i = 0; i < layout.total(); ++i) J(i, layout.class_of_row(i)) = 1.0;
    return J;
}

} // namespace

ExpansionTerms expansion_from_components(const MatrixXd& W, const MatrixXd& Omega,
                                         const VectorXd& psi,
                                         const PopulationStats& stats,
                                         const ClassLayout& layout,
                                         const KernelAtTau& k) {
    const Index n = layout.total();
    const int K = layout.num_classes();
    const double p = static_cast<double>(Omega.cols());
    const double sqrtp = std::sqrt(p);
    if (W.rows() != n || Omega.rows() != n || psi.size() != n)
        throw std::invalid_argument("expansion: component dimensions do not match");

    ExpansionTerms terms;
    terms.psi = psi;
    terms.Omega = Omega;
    terms.indicators = class_indicators(layout);
    const MatrixXd& J = terms.indicators;
    const VectorXd ones = VectorXd::Ones(n);

    // Per-row class statistics.
    VectorXd tv(n), tv2(n);
    for (Index i = 0; i < n; ++i) {
        const double t = stats.t(layout.class_of_row(i));
        tv(i) = t / sqrtp;
        tv2(i) = t * t / p;
    }
    const VectorXd psi2 = psi.cwiseProduct(psi);
    const VectorXd psi_tv = psi.cwiseProduct(tv);

    terms.leading = k.f * ones * ones.transpose();
    {
        const VectorXd s = psi + tv;
        terms.order_sqrt_n =
            k.df * (s * ones.transpose() + ones * s.transpose());
    }

    auto& parts = terms.order_one_parts;
    parts.reserve(18);
    const double half_d2f = 0.5 * k.d2f;

    // f' group
    MatrixXd dist(K, K);
    for (int a = 0; a < K; ++a)
        for (int b = 0; b < K; ++b) dist(b, a) = stats.mu_circ_dist2(a, b) / p;
    parts.emplace_back("mu_dist", k.df * (J * dist * J.transpose()));

    MatrixXd U(Omega.cols(), K);
    for (int a = 0; a < K; ++a) U.col(a) = stats.mu_circ[a];
    const MatrixXd M = Omega * U; // M(i,a) = omega_i . mu_circ_a
    VectorXd q(n);                // q(i) = omega_i . mu_circ_{class(i)}
    for (Index i = 0; i < n; ++i) q(i) = M(i, layout.class_of_row(i));

    parts.emplace_back("omega_mu_col", k.df * (-2.0 / sqrtp) * (M * J.transpose()));
    parts.emplace_back("omega_mu_row", k.df * (2.0 / sqrtp) * (q * ones.transpose()));
    parts.emplace_back("omega_mu_col_t",
                       k.df * (-2.0 / sqrtp) * (J * M.transpose()));
    parts.emplace_back("omega_mu_row_t", k.df * (2.0 / sqrtp) * (ones * q.transpose()));
    parts.emplace_back("gram", k.df * (-2.0) * (Omega * Omega.transpose()));

    // f''/2 group
    parts.emplace_back("psi2_row", half_d2f * (psi2 * ones.transpose()));
    parts.emplace_back("psi2_col", half_d2f * (ones * psi2.transpose()));
    parts.emplace_back("t2_row", half_d2f * (tv2 * ones.transpose()));
    parts.emplace_back("t2_col", half_d2f * (ones * tv2.transpose()));
    parts.emplace_back("t_outer", half_d2f * 2.0 * (tv * tv.transpose()));
    parts.emplace_back("psi_t_own_row", half_d2f * 2.0 * (psi_tv * ones.transpose()));
    parts.emplace_back("t_psi", half_d2f * 2.0 * (tv * psi.transpose()));
    parts.emplace_back("psi_t_own_col", half_d2f * 2.0 * (ones * psi_tv.transpose()));
    parts.emplace_back("psi_t", half_d2f * 2.0 * (psi * tv.transpose()));
    MatrixXd Tcoef = 4.0 * stats.T / p;
    parts.emplace_back("T_pairs", half_d2f * (J * Tcoef * J.transpose()));
    parts.emplace_back("psi_outer", half_d2f * 2.0 * (psi * psi.transpose()));

    parts.emplace_back("diag", (k.f0 - k.f + k.tau * k.df) *
                                   MatrixXd::Identity(n, n));

    terms.order_one = MatrixXd::Zero(n, n);
    for (const auto& part : parts) terms.order_one += part.second;
    terms.residual = W - terms.leading - terms.order_sqrt_n - terms.order_one;
    return terms;
}

ExpansionTerms expansion_terms(const LabelledSplit& split, const MixtureModel& model,
                               const KernelSpec& kernel) {
    if (model.dim() != split.p() ||
        model.num_classes() != split.layout.num_classes())
        throw std::invalid_argument("expansion_terms: model does not match split");
    const ClassLayout& layout = split.layout;
    const Index n = split.n();
    const double p = static_cast<double>(split.p());
    const double sqrtp = std::sqrt(p);

    const PopulationStats stats = population_stats(model, layout);
    MatrixXd Omega(n, split.p());
    VectorXd psi(n);
    for (Index i = 0; i < n; ++i) {
        const int kcls = layout.class_of_row(i);
        Omega.row(i) = (split.X.row(i) - model.mean(kcls).transpose()) / sqrtp;
        psi(i) = Omega.row(i).squaredNorm() - model.covariance(kcls).trace() / p;
    }
    const MatrixXd W = weight_matrix(split, kernel);
    return expansion_from_components(W, Omega, psi, stats, layout,
                                     KernelAtTau::from(kernel, stats.tau));
}

VectorXd labelled_spread(const LabelledSplit& split, const MixtureModel& model) {
    if (model.dim() != split.p())
        throw std::invalid_argument("labelled_spread: model does not match split");
    const ClassLayout& layout = split.layout;
    const double p = static_cast<double>(split.p());
    VectorXd s = VectorXd::Zero(layout.num_classes());
    for (int k = 0; k < layout.num_classes(); ++k) {
        const double expected = model.covariance(k).trace() / p;
        for (Index i = 0; i < layout.labelled(k); ++i) {
            const auto row = split.X.row(layout.labelled_offset(k) + i);
            const double sq =
                (row - model.mean(k).transpose()).squaredNorm() / p;
            s(k) += sq - expected;
        }
    }
    return s;
}

double operator_norm(const MatrixXd& M, double tol, Index max_iter,
                     std::uint64_t seed) {
    NormalSampler rng(seed);
    VectorXd v(M.cols());
    for (Index i = 0; i < v.size(); ++i) v(i) = rng();
    v.normalize();
    double sigma = 0.0;
    for (Index it = 0; it < max_iter; ++it) {
        VectorXd w = M * v;
        const double s = w.norm();
        if (s == 0.0) return 0.0;
        v = M.transpose() * w;
        const double vn = v.norm();
        if (vn == 0.0) return s;
        v /= vn;
        if (std::abs(s - sigma) <= tol * std::max(s, 1e-300)) return s;
        sigma = s;
    }
    return sigma;
}

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

} // namespace

DecayTable residual_decay(
    const std::function<MixtureModel(Index p)>& model_factory,
    const std::function<ClassLayout(Index n)>& layout_factory,
    const std::function<KernelSpec(double tau)>& kernel_factory, double c0,
    const std::vector<Index>& n_list, const std::vector<std::uint64_t>& seeds) {
    if (n_list.empty() || seeds.empty())
        throw std::invalid_argument("residual_decay: empty size or seed list");
    DecayTable table;
    for (Index n : n_list) {
        const Index p = static_cast<Index>(std::llround(c0 * static_cast<double>(n)));
        const MixtureModel model = model_factory(p);
        const ClassLayout layout = layout_factory(n);
        if (layout.total() != n)
            throw std::invalid_argument("residual_decay: layout size mismatch");
        const PopulationStats stats = population_stats(model, layout);
        const KernelSpec kernel = kernel_factory(stats.tau);

        std::vector<double> ns, nsq, none, nres;
        for (std::uint64_t seed : seeds) {
            const LabelledSplit split = sample(model, layout, seed);
            const ExpansionTerms terms = expansion_terms(split, model, kernel);
            ns.push_back(std::abs(kernel.f(stats.tau)) * static_cast<double>(n));
            nsq.push_back(operator_norm(terms.order_sqrt_n));
            none.push_back(operator_norm(terms.order_one));
            nres.push_back(operator_norm(terms.residual));
        }
        table.rows.push_back(DecayRow{n, median(ns), median(nsq), median(none),
                                      median(nres)});
    }

    // Least-squares slope of log residual norm against log n.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(table.rows.size());
    for (const DecayRow& row : table.rows) {
        const double x = std::log(static_cast<double>(row.n));
        const double y = std::log(row.norm_residual);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = m * sxx - sx * sx;
    table.residual_slope = denom != 0.0 ? (m * sxy - sx * sy) / denom : 0.0;
    return table;
}

DegreeExpansionReport degree_expansion_check(const LabelledSplit& split,
                                             const MixtureModel& model,
                                             const KernelSpec& kernel, double sigma) {
    const ExpansionTerms terms = expansion_terms(split, model, kernel);
    const PopulationStats stats = population_stats(model, split.layout);
    const double ftau = kernel.f(stats.tau);
    const Index n = split.n();
    const double nd = static_cast<double>(n);

    const MatrixXd W = terms.leading + terms.order_sqrt_n + terms.order_one +
                       terms.residual; // exact W by construction
    const VectorXd d = degree_vector(W);

    const VectorXd sqrt_row = terms.order_sqrt_n.rowwise().sum();
    const VectorXd one_row = terms.order_one.rowwise().sum();

    DegreeExpansionReport report;
    report.sigma = sigma;
    double dev = 0.0;
    const double fs = std::pow(ftau, sigma);
    for (Index i = 0; i < n; ++i) {
        const double exact = std::pow(d(i) / nd, sigma);
        const double approx =
            fs * (1.0 + sigma * (sqrt_row(i) + one_row(i)) / (nd * ftau) +
                  0.5 * sigma * (sigma - 1.0) * sqrt_row(i) * sqrt_row(i) /
                      (nd * nd * ftau * ftau));
        dev = std::max(dev, std::abs(exact - approx));
    }
    report.max_abs_deviation = dev;

    // Near-rank-one collapse of D_u^{-1-a} W_uu D_u^{a}, with a = sigma.
    const ClassLayout& layout = split.layout;
    const Index nu = layout.unlabelled_total();
    const VectorXd du = d.tail(nu);
    VectorXd du_neg(nu), du_pos(nu);
    for (Index i = 0; i < nu; ++i) {
        du_neg(i) = std::pow(du(i), -1.0 - sigma);
        du_pos(i) = std::pow(du(i), sigma);
    }
    const MatrixXd L = du_neg.asDiagonal() * W.bottomRightCorner(nu, nu) *
                       du_pos.asDiagonal();
    const MatrixXd diff =
        L - MatrixXd::Constant(nu, nu, 1.0 / nd);
    report.luu_deviation_scaled = operator_norm(diff) / std::sqrt(nd);
    return report;
}

} // namespace gssl

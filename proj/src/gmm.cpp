#include "gssl/gmm.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <cmath>
#include <sstream>

#include "gssl/rng.hpp"

namespace gssl {

MixtureModel::MixtureModel(std::vector<VectorXd> means, std::vector<MatrixXd> factors,
                           std::vector<MatrixXd> covariances)
    : means_(std::move(means)),
      factors_(std::move(factors)),
      covariances_(std::move(covariances)) {
    if (means_.empty()) throw std::invalid_argument("MixtureModel: no classes");
    const Index p = means_[0].size();
    for (const auto& mu : means_)
        if (mu.size() != p)
            throw std::invalid_argument("MixtureModel: mean dimension mismatch");
    for (const auto& L : factors_)
        if (L.rows() != p)
            throw std::invalid_argument("MixtureModel: factor dimension mismatch");
    if (factors_.size() != means_.size())
        throw std::invalid_argument("MixtureModel: class count mismatch");
}

MixtureModel MixtureModel::from_covariances(std::vector<VectorXd> means,
                                            const std::vector<MatrixXd>& covariances) {
    std::vector<MatrixXd> factors;
    factors.reserve(covariances.size());
    for (std::size_t k = 0; k < covariances.size(); ++k) {
        const MatrixXd& C = covariances[k];
        if (C.rows() != C.cols())
            throw std::invalid_argument("MixtureModel: covariance not square");
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(C);
        if (es.info() != Eigen::Success)
            throw numeric_error("MixtureModel: eigendecomposition failed");
        const double lmin = es.eigenvalues().minCoeff();
        if (!(lmin > 0.0)) {
            std::ostringstream msg;
            msg << "MixtureModel: covariance of class " << k
                << " not positive definite (min eigenvalue " << lmin << ")";
            throw std::invalid_argument(msg.str());
        }
        factors.push_back(es.eigenvectors() *
                          es.eigenvalues().cwiseSqrt().asDiagonal() *
                          es.eigenvectors().transpose());
    }
    return MixtureModel(std::move(means), std::move(factors), covariances);
}

MixtureModel MixtureModel::from_factors(std::vector<VectorXd> means,
                                        std::vector<MatrixXd> factors) {
    std::vector<MatrixXd> covariances;
    covariances.reserve(factors.size());
    for (std::size_t k = 0; k < factors.size(); ++k) {
        const MatrixXd& L = factors[k];
        Eigen::ColPivHouseholderQR<MatrixXd> qr(L);
        if (qr.rank() < L.rows()) {
            std::ostringstream msg;
            msg << "MixtureModel: factor of class " << k << " is rank deficient";
            throw std::invalid_argument(msg.str());
        }
        covariances.push_back(L * L.transpose());
    }
    return MixtureModel(std::move(means), std::move(factors), std::move(covariances));
}

PopulationStats population_stats(const MixtureModel& model, const ClassLayout& layout) {
    std::vector<VectorXd> means;
    std::vector<MatrixXd> covs;
    for (int k = 0; k < model.num_classes(); ++k) {
        means.push_back(model.mean(k));
        covs.push_back(model.covariance(k));
    }
    return population_stats_from_moments(means, covs, layout);
}

PopulationStats population_stats_from_moments(const std::vector<VectorXd>& means,
                                              const std::vector<MatrixXd>& covariances,
                                              const ClassLayout& layout) {
    if (static_cast<int>(means.size()) != layout.num_classes() ||
        covariances.size() != means.size())
        throw std::invalid_argument("population_stats: moments/layout class mismatch");
    const int K = layout.num_classes();
    const Index p = means[0].size();
    const double nl = static_cast<double>(layout.labelled_total());
    const double sqrtp = std::sqrt(static_cast<double>(p));

    VectorXd trC(K);
    for (int k = 0; k < K; ++k) trC(k) = covariances[k].trace();

    PopulationStats s;
    s.T.resize(K, K);
    for (int a = 0; a < K; ++a)
        for (int b = 0; b <= a; ++b) {
            const double v =
                covariances[a].cwiseProduct(covariances[b]).sum() / p;
            s.T(a, b) = v;
            s.T(b, a) = v;
        }

    // Global (n_k/n) weights.
    double tr_mean = 0.0;
    VectorXd mu_mean = VectorXd::Zero(p);
    for (int k = 0; k < K; ++k) {
        const double w = layout.c_k(k);
        tr_mean += w * trC(k);
        mu_mean += w * means[k];
    }
    s.tau = 2.0 * tr_mean / static_cast<double>(p);
    s.t.resize(K);
    s.mu_circ.resize(K);
    for (int k = 0; k < K; ++k) {
        s.t(k) = (trC(k) - tr_mean) / sqrtp;
        s.mu_circ[k] = means[k] - mu_mean;
    }

    // Labelled (n_lk/n_l) weights.
    double tr_mean_l = 0.0;
    VectorXd mu_mean_l = VectorXd::Zero(p);
    VectorXd wl(K);
    for (int k = 0; k < K; ++k) {
        wl(k) = static_cast<double>(layout.labelled(k)) / nl;
        tr_mean_l += wl(k) * trC(k);
        mu_mean_l += wl(k) * means[k];
    }
    s.t_tilde.resize(K);
    s.mu_tilde.resize(K);
    for (int k = 0; k < K; ++k) {
        s.t_tilde(k) = (trC(k) - tr_mean_l) / sqrtp;
        s.mu_tilde[k] = means[k] - mu_mean_l;
    }
    // T_tilde_ab = tr(Ctilde_a Ctilde_b)/p expands into plain T values.
    s.T_tilde.resize(K, K);
    VectorXd Tw = s.T * wl; // Tw(a) = sum_d w_d T_ad
    const double Tww = wl.dot(Tw);
    for (int a = 0; a < K; ++a)
        for (int b = 0; b < K; ++b)
            s.T_tilde(a, b) = s.T(a, b) - Tw(a) - Tw(b) + Tww;

    s.mu_cross.resize(K);
    for (int b = 0; b < K; ++b) {
        s.mu_cross[b].resize(K, K);
        std::vector<VectorXd> Cmu(K);
        for (int a = 0; a < K; ++a) Cmu[a] = covariances[b] * s.mu_circ[a];
        for (int a1 = 0; a1 < K; ++a1)
            for (int a2 = 0; a2 <= a1; ++a2) {
                const double v = s.mu_circ[a1].dot(Cmu[a2]);
                s.mu_cross[b](a1, a2) = v;
                s.mu_cross[b](a2, a1) = v;
            }
    }

    return s;
}

LabelledSplit sample(const MixtureModel& model, const ClassLayout& layout,
                     std::uint64_t seed) {
    if (model.num_classes() != layout.num_classes())
        throw std::invalid_argument("sample: model/layout class mismatch");
    const Index p = model.dim();
    MatrixXd X(layout.total(), p);
    NormalSampler rng(seed);

    auto fill_block = [&](Index row0, Index rows, int k) {
        if (rows == 0) return;
        MatrixXd G(rows, p);
        for (Index i = 0; i < rows; ++i)
            for (Index j = 0; j < p; ++j) G(i, j) = rng();
        X.middleRows(row0, rows) =
            (G * model.factor(k).transpose()).rowwise() + model.mean(k).transpose();
    };
    for (int k = 0; k < layout.num_classes(); ++k)
        fill_block(layout.labelled_offset(k), layout.labelled(k), k);
    for (int k = 0; k < layout.num_classes(); ++k)
        fill_block(layout.unlabelled_offset(k), layout.unlabelled(k), k);

    return LabelledSplit(std::move(X), layout);
}

BuiltinModel builtin_model_from_name(const std::string& name) {
    if (name == "two_means") return BuiltinModel::two_means;
    if (name == "concentric") return BuiltinModel::concentric;
    if (name == "three_class") return BuiltinModel::three_class;
    throw std::invalid_argument("unknown builtin model: " + name);
}

std::string builtin_model_name(BuiltinModel which) {
    switch (which) {
        case BuiltinModel::two_means: return "two_means";
        case BuiltinModel::concentric: return "concentric";
        case BuiltinModel::three_class: return "three_class";
    }
    throw std::invalid_argument("builtin_model_name: bad enum");
}

MixtureModel builtin_model(BuiltinModel which, Index p) {
    if (p < 2) throw std::invalid_argument("builtin_model: p must be at least 2");
    const double bump = 1.0 + 3.0 / std::sqrt(static_cast<double>(p));
    switch (which) {
        case BuiltinModel::two_means: {
            VectorXd mu1 = VectorXd::Zero(p);
            VectorXd mu2 = VectorXd::Zero(p);
            mu1(0) = 4.0;
            mu2(1) = 4.0;
            MatrixXd C2(p, p);
            for (Index i = 0; i < p; ++i)
                for (Index j = 0; j < p; ++j)
                    C2(i, j) = std::pow(0.4, std::abs(static_cast<double>(i - j))) * bump;
            return MixtureModel::from_covariances({mu1, mu2},
                                                  {MatrixXd::Identity(p, p), C2});
        }
        case BuiltinModel::concentric: {
            VectorXd mu = VectorXd::Zero(p);
            // Scalar covariances: the symmetric square root is known, skip
            // the eigendecomposition.
            MatrixXd L1 = MatrixXd::Identity(p, p);
            MatrixXd L2 = std::sqrt(bump) * MatrixXd::Identity(p, p);
            return MixtureModel::from_factors({mu, mu}, {L1, L2});
        }
        case BuiltinModel::three_class: {
            // The mean ratios mu3 = 3 mu2 = 6 mu1 along e1 with ||mu1|| = 1.
            VectorXd mu1 = VectorXd::Zero(p);
            mu1(0) = 1.0;
            MatrixXd I = MatrixXd::Identity(p, p);
            return MixtureModel::from_factors({mu1, 2.0 * mu1, 6.0 * mu1}, {I, I, I});
        }
    }
    throw std::invalid_argument("builtin_model: bad enum");
}

GrowthRateReport growth_rate_report(const MixtureModel& model,
                                    const ClassLayout& layout, double threshold) {
    const PopulationStats s = population_stats(model, layout);
    const int K = model.num_classes();
    GrowthRateReport r;
    r.mu_circ_norm.resize(K);
    r.t = s.t;
    r.tau = s.tau;
    r.c0 = layout.c0(model.dim());
    r.threshold = threshold;
    r.mu_flag.resize(K);
    r.t_flag.resize(K);
    for (int k = 0; k < K; ++k) {
        r.mu_circ_norm(k) = s.mu_circ[k].norm();
        r.mu_flag[k] = r.mu_circ_norm(k) > threshold;
        r.t_flag[k] = std::abs(s.t(k)) > threshold;
    }
    r.tau_flag = !(r.tau > 0.0);
    return r;
}

} // namespace gssl

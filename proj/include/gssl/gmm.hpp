#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gssl/types.hpp"

namespace gssl {

/// Gaussian mixture with dense covariance factors L_k, L_k L_k^T = C_k.
/// Every covariance must be symmetric positive definite (full-rank factor).
class MixtureModel {
public:
    /// Builds factors as symmetric square roots via eigendecomposition.
    static MixtureModel from_covariances(std::vector<VectorXd> means,
                                         const std::vector<MatrixXd>& covariances);

    /// Accepts any full-rank factorization L L^T = C.
    static MixtureModel from_factors(std::vector<VectorXd> means,
                                     std::vector<MatrixXd> factors);

    int num_classes() const { return static_cast<int>(means_.size()); }
    Index dim() const { return means_.empty() ? 0 : means_[0].size(); }

    const VectorXd& mean(int k) const { return means_.at(k); }
    const MatrixXd& factor(int k) const { return factors_.at(k); }
    const MatrixXd& covariance(int k) const { return covariances_.at(k); }

private:
    MixtureModel(std::vector<VectorXd> means, std::vector<MatrixXd> factors,
                 std::vector<MatrixXd> covariances);

    std::vector<VectorXd> means_;
    std::vector<MatrixXd> factors_;
    std::vector<MatrixXd> covariances_;
};

/// Population statistics of a mixture under a layout:
///   tau      = (2/p) tr Cbar,  Cbar the n_k/n-weighted covariance mean
///   t_k      = tr(C_k - Cbar) / sqrt(p)
///   T_kk'    = tr(C_k C_k') / p
/// plus the labelled-weighted (tilde) counterparts and the centered means.
/// mu_cross[b](a1,a2) = mu_circ_a1^T C_b mu_circ_a2 extends the record with
/// the cross-moments needed by the asymptotic covariances.
struct PopulationStats {
    double tau;
    VectorXd t;
    MatrixXd T;
    VectorXd t_tilde;
    MatrixXd T_tilde;
    std::vector<VectorXd> mu_circ;
    std::vector<VectorXd> mu_tilde;
    std::vector<MatrixXd> mu_cross;

    double mu_tilde_dot(int a, int b) const { return mu_tilde[a].dot(mu_tilde[b]); }
    double mu_circ_dist2(int a, int b) const {
        return (mu_circ[b] - mu_circ[a]).squaredNorm();
    }
};

PopulationStats population_stats(const MixtureModel& model, const ClassLayout& layout);

/// Same statistics from raw per-class moments; covariances need not be
/// positive definite (e.g. empirical moments of real data).
PopulationStats population_stats_from_moments(const std::vector<VectorXd>& means,
                                              const std::vector<MatrixXd>& covariances,
                                              const ClassLayout& layout);

/// Draws a LabelledSplit in block order; row = mu_k + L_k g with g iid
/// standard normal. Deterministic given the seed.
LabelledSplit sample(const MixtureModel& model, const ClassLayout& layout,
                     std::uint64_t seed);

enum class BuiltinModel { two_means, concentric, three_class };

BuiltinModel builtin_model_from_name(const std::string& name);
std::string builtin_model_name(BuiltinModel which);

/// The stock experiment models:
///   two_means:   mu1 = 4 e1, mu2 = 4 e2, C1 = I, (C2)_ij = 0.4^|i-j| (1 + 3/sqrt(p))
///   concentric:  mu1 = mu2 = 0, C1 = I, C2 = (1 + 3/sqrt(p)) I
///   three_class: mu1 = e1, mu2 = 2 e1, mu3 = 6 e1, all covariances I
MixtureModel builtin_model(BuiltinModel which, Index p);

/// Advisory growth-rate diagnostics; never blocking.
struct GrowthRateReport {
    VectorXd mu_circ_norm;  // ||mu_k - mu_bar||, nominal O(1)
    VectorXd t;             // tr(C_k - Cbar)/sqrt(p), nominal O(1)
    double tau;             // (2/p) tr Cbar, should stay away from 0
    double c0;              // p/n
    std::vector<bool> mu_flag;
    std::vector<bool> t_flag;
    bool tau_flag;
    double threshold;
};

GrowthRateReport growth_rate_report(const MixtureModel& model,
                                    const ClassLayout& layout,
                                    double threshold = 5.0);

} // namespace gssl

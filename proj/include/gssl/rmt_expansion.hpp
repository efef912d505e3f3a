#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gssl/gmm.hpp"
#include "gssl/kernel.hpp"
#include "gssl/types.hpp"

namespace gssl {

/// Kernel values frozen at the expansion point tau.
struct KernelAtTau {
    double tau;
    double f0;  // f(0)
    double f;   // f(tau)
    double df;  // f'(tau)
    double d2f; // f''(tau)

    static KernelAtTau from(const KernelSpec& kernel, double tau) {
        return {tau, kernel.f(0.0), kernel.f(tau), kernel.df(tau), kernel.d2f(tau)};
    }
};

/// The three leading operator-norm scales of the kernel matrix,
///   W = leading + order_sqrt_n + order_one + residual  (exactly),
/// with the order-one part kept as named summands so a reconstruction
/// failure localizes to one term. psi and Omega are the fluctuation
/// statistics the terms are built from.
struct ExpansionTerms {
    MatrixXd leading;      // f(tau) 1 1^T, rank one, norm n f(tau)
    MatrixXd order_sqrt_n;
    MatrixXd order_one;
    MatrixXd residual;
    std::vector<std::pair<std::string, MatrixXd>> order_one_parts;
    VectorXd psi;     // ||omega_i||^2 - tr C_k / p
    MatrixXd Omega;   // rows (x_i - mu_k) / sqrt(p)
    MatrixXd indicators; // n x K class indicator columns j_k
};

/// Builds psi / Omega / indicators from a split sampled from a known model
/// (true classes and true moments), then assembles the expansion and the
/// residual against the exact W.
ExpansionTerms expansion_terms(const LabelledSplit& split, const MixtureModel& model,
                               const KernelSpec& kernel);

/// Same assembly from explicitly supplied components (used by tests to
/// force degenerate fluctuations).
ExpansionTerms expansion_from_components(const MatrixXd& W, const MatrixXd& Omega,
                                         const VectorXd& psi,
                                         const PopulationStats& stats,
                                         const ClassLayout& layout,
                                         const KernelAtTau& k);

/// Per-class sums of psi over the labelled block (the conditional law's
/// spread vector).
VectorXd labelled_spread(const LabelledSplit& split, const MixtureModel& model);

/// Largest singular value by power iteration on M^T M, seeded start,
/// relative tolerance `tol`, hard iteration cap.
double operator_norm(const MatrixXd& M, double tol = 1e-6, Index max_iter = 500,
                     std::uint64_t seed = 12345);

struct DecayRow {
    Index n;
    double norm_leading;
    double norm_sqrt;
    double norm_one;
    double norm_residual;
};

struct DecayTable {
    std::vector<DecayRow> rows;   // medians over seeds, one row per n
    double residual_slope;        // least-squares slope of log norm vs log n
};

/// Measures the expansion norms over growing n at fixed aspect ratio
/// p = round(c0 n). Factories supply the model / layout / kernel for each
/// size (the kernel factory receives the population tau).
DecayTable residual_decay(
    const std::function<MixtureModel(Index p)>& model_factory,
    const std::function<ClassLayout(Index n)>& layout_factory,
    const std::function<KernelSpec(double tau)>& kernel_factory, double c0,
    const std::vector<Index>& n_list, const std::vector<std::uint64_t>& seeds);

struct DegreeExpansionReport {
    double sigma;
    double max_abs_deviation;     // second-order expansion of (D/n)^sigma
    double luu_deviation_scaled;  // ||D_u^{-1-s} W_uu D_u^{s} - 11^T/n|| / sqrt(n)
};

/// Validates the Taylor expansion of (n^{-1} D)^sigma around f(tau)^sigma I
/// and the near-rank-one collapse of D_u^{-1-a} W_uu D_u^{a} (with a =
/// sigma in the second check).
DegreeExpansionReport degree_expansion_check(const LabelledSplit& split,
                                             const MixtureModel& model,
                                             const KernelSpec& kernel, double sigma);

} // namespace gssl

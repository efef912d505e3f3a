#pragma once

#include <cstdint>
#include <optional>

#include "gssl/gmm.hpp"
#include "gssl/kernel.hpp"
#include "gssl/types.hpp"

namespace gssl {

/// Asymptotic Gaussian law of the centered, scaled score vector of an
/// unlabelled point whose true class is b. The row-common offset shared
/// by all classes is not represented; every comparison made with these
/// laws is offset-invariant.
struct GaussianScoreLaw {
    int b;
    VectorXd m;
    MatrixXd Sigma;
};

/// Everything the score laws need: population statistics, layout counts,
/// kernel derivatives at tau, and the exponent (alpha directly, or beta
/// with alpha = -1 + beta/sqrt(p)). `labelled_spread` carries the realized
/// per-class sums of centered squared-norm fluctuations of the labelled
/// data, needed only by the conditional variant.
struct TheoryInputs {
    PopulationStats stats;
    ClassLayout layout;
    Index p;
    double f;
    double df;
    double d2f;
    double alpha = -1.0;
    double beta = 0.0;
    std::optional<VectorXd> labelled_spread;

    static TheoryInputs from_model(const MixtureModel& model, const ClassLayout& layout,
                                   const KernelSpec& kernel, double alpha);
    static TheoryInputs from_model_beta(const MixtureModel& model,
                                        const ClassLayout& layout,
                                        const KernelSpec& kernel, double beta);
};

/// Score law in the critical scaling alpha = -1 + beta/sqrt(p):
///   [m_b]_a = -(2f'/f) mutil_a.mutil_b + (f''/f - f'^2/f^2) ttil_a ttil_b
///             + (2f''/f) Ttil_ab + (beta/c_l)(f'/f) t_a
///   [S_b]_{a1 a2} = 2 (f''/f - f'^2/f^2)^2 T_bb t_a1 t_a2
///             + 4 (f'^2/f^2) [ mu_a1 C_b mu_a2 + d_{a1 a2} c0 T_{b,a1} / (c_l c_l,a1) ]
GaussianScoreLaw law_critical_scaling(const TheoryInputs& inputs, int b);

enum class LawVariant { conditional, unconditional };

/// Score law for general alpha = O(1), in its conditional (given the
/// labelled data, requires labelled_spread) and unconditional forms.
GaussianScoreLaw law_general(const TheoryInputs& inputs, int b, LawVariant variant);

/// theta = ([m_b]_b - [m_b]_a) / sqrt([S_b]_bb + [S_b]_aa - 2 [S_b]_ab).
/// A zero variance combination maps to +/-inf or 0 by the sign of the gap;
/// below -1e-10 it is an error.
double theta(const GaussianScoreLaw& law, int a);

/// Standard normal CDF (1/sqrt(2 pi) normalization), |err| <= 1e-7.
double std_normal_cdf(double u);

struct TwoClassAccuracy {
    double acc1;
    double acc2;
    double mean; // weighted by the unlabelled class fractions
};

TwoClassAccuracy accuracy_two_class(const GaussianScoreLaw& law1,
                                    const GaussianScoreLaw& law2,
                                    const ClassLayout& layout);

struct MulticlassAccuracy {
    VectorXd probability; // P([G]_b maximal), one entry per class
    VectorXd std_error;
};

/// Monte Carlo estimate of P([G]_b maximal) under each law. Sigma is
/// symmetrized and eigenvalue-clipped at zero before sampling; eigenvalues
/// below -1e-10 times the largest are an error.
MulticlassAccuracy accuracy_multiclass(const std::vector<GaussianScoreLaw>& laws,
                                       Index trials, std::uint64_t seed);

/// Writes one row per law: class, mean entries, covariance entries, the
/// theta statistics against every other class, and the predicted accuracy
/// (closed form for K = 2, Monte Carlo with the supplied budget otherwise).
void write_laws_csv(const std::string& path,
                    const std::vector<GaussianScoreLaw>& laws,
                    Index mc_trials = 100000, std::uint64_t mc_seed = 1);

} // namespace gssl

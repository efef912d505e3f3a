#pragma once

#include <vector>

#include "gssl/types.hpp"

namespace gssl {

/// Full n x K score matrix. The labelled block is one-hot by construction;
/// the unlabelled block comes out of the solver.
struct ScoreMatrix {
    MatrixXd F;
    ClassLayout layout;
    double alpha;

    Eigen::Block<const MatrixXd> labelled_block() const {
        return F.topRows(layout.labelled_total());
    }
    Eigen::Block<const MatrixXd> unlabelled_block() const {
        return F.bottomRows(layout.unlabelled_total());
    }
};

struct FixedPointOptions {
    double tol = 1e-10;
    Index max_iter = 10000;
};

/// Direct solve of
///   F_u = (I - D_u^{-1-a} W_uu D_u^{a})^{-1} D_u^{-1-a} W_ul D_l^{a} F_l
/// via a factorized dense solve (no explicit inverse). Requires all
/// degrees positive; throws solver_error with a condition estimate if the
/// system is numerically singular.
ScoreMatrix solve_closed_form(const MatrixXd& W, const VectorXd& d,
                              const ClassLayout& layout, double alpha);

/// Label-propagation iteration
///   F_u <- D_u^{-1-a} W_uu D_u^{a} F_u + D_u^{-1-a} W_ul D_l^{a} F_l
/// from F_u = 0, stopped when the max-abs change drops below tol.
ScoreMatrix solve_fixed_point(const MatrixXd& W, const VectorXd& d,
                              const ClassLayout& layout, double alpha,
                              const FixedPointOptions& opts = {});

/// Normalized unlabelled scores: Fhat_ik = (n / n_lk) F_ik.
MatrixXd normalize_scores(const ScoreMatrix& scores);

/// Subtract the per-row mean across classes; row sums become zero.
MatrixXd center_scores(const MatrixXd& block);

/// Per-row argmax; ties break toward the smallest class index.
std::vector<int> classify(const MatrixXd& scores);

struct Metrics {
    double accuracy;
    VectorXd precision;      // per class; 0 when the class is never predicted
    VectorXd recall;         // per class
    double average_precision; // unweighted mean of per-class precisions
};

Metrics metrics(const std::vector<int>& predicted, const std::vector<int>& truth,
                int num_classes);

/// Writes a score block as CSV with header `node_index,class_1,...,class_K`.
/// `first_node_index` labels the first row (e.g. n_l for an unlabelled block).
void write_scores_csv(const std::string& path, const MatrixXd& block,
                      Index first_node_index);

} // namespace gssl

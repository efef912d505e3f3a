#include "gssl/propagation.hpp"

#include <Eigen/LU>

#include <cmath>
#include <sstream>

#include "gssl/io.hpp"

namespace gssl {

namespace {

// d^s entrywise as exp(s log d); degree_vector has already enforced d > 0,
// but re-check here since callers may pass their own vectors.
VectorXd fractional_power(const VectorXd& d, double s) {
    VectorXd out(d.size());
    for (Index i = 0; i < d.size(); ++i) {
        if (!(d(i) > 0.0)) {
            std::ostringstream msg;
            msg << "fractional degree power: nonpositive degree at node " << i;
            throw degeneracy_error(msg.str());
        }
        out(i) = std::exp(s * std::log(d(i)));
    }
    return out;
}

struct PropagationSystem {
    MatrixXd iteration; // D_u^{-1-a} W_uu D_u^{a}
    MatrixXd source;    // D_u^{-1-a} W_ul D_l^{a} F_l
};

PropagationSystem build_system(const MatrixXd& W, const VectorXd& d,
                               const ClassLayout& layout, double alpha) {
    const Index n = layout.total();
    const Index nl = layout.labelled_total();
    const Index nu = layout.unlabelled_total();
    if (W.rows() != n || W.cols() != n || d.size() != n)
        throw std::invalid_argument("propagation: W/d dimensions do not match layout");

    const VectorXd du_neg = fractional_power(d.tail(nu), -1.0 - alpha);
    const VectorXd du_pos = fractional_power(d.tail(nu), alpha);
    const VectorXd dl_pos = fractional_power(d.head(nl), alpha);

    PropagationSystem sys;
    sys.iteration = du_neg.asDiagonal() * W.bottomRightCorner(nu, nu) *
                    du_pos.asDiagonal();
    sys.source = du_neg.asDiagonal() *
                 (W.bottomLeftCorner(nu, nl) *
                  (dl_pos.asDiagonal() * one_hot_labels(layout)));
    return sys;
}

ScoreMatrix assemble(const ClassLayout& layout, double alpha, const MatrixXd& Fu) {
    MatrixXd F(layout.total(), layout.num_classes());
    F.topRows(layout.labelled_total()) = one_hot_labels(layout);
    F.bottomRows(layout.unlabelled_total()) = Fu;
    return ScoreMatrix{std::move(F), layout, alpha};
}

} // namespace

ScoreMatrix solve_closed_form(const MatrixXd& W, const VectorXd& d,
                              const ClassLayout& layout, double alpha) {
    PropagationSystem sys = build_system(W, d, layout, alpha);
    const Index nu = layout.unlabelled_total();
    MatrixXd A = MatrixXd::Identity(nu, nu) - sys.iteration;
    Eigen::PartialPivLU<MatrixXd> lu(A);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-14)) {
        std::ostringstream msg;
        msg << "solve_closed_form: system numerically singular, rcond=" << rcond;
        throw solver_error(msg.str());
    }
    MatrixXd Fu = lu.solve(sys.source);
    if (!Fu.allFinite())
        throw solver_error("solve_closed_form: non-finite solution");
    return assemble(layout, alpha, Fu);
}

ScoreMatrix solve_fixed_point(const MatrixXd& W, const VectorXd& d,
                              const ClassLayout& layout, double alpha,
                              const FixedPointOptions& opts) {
    PropagationSystem sys = build_system(W, d, layout, alpha);
    const Index nu = layout.unlabelled_total();
    MatrixXd Fu = MatrixXd::Zero(nu, layout.num_classes());
    double change = std::numeric_limits<double>::infinity();
    for (Index iter = 0; iter < opts.max_iter; ++iter) {
        MatrixXd next = sys.iteration * Fu + sys.source;
        change = (next - Fu).cwiseAbs().maxCoeff();
        Fu.swap(next);
        if (!std::isfinite(change))
            throw convergence_error("solve_fixed_point: iteration diverged");
        if (change <= opts.tol) return assemble(layout, alpha, Fu);
    }
    std::ostringstream msg;
    msg << "solve_fixed_point: no convergence after " << opts.max_iter
        << " iterations, last change " << change;
    throw convergence_error(msg.str());
}

MatrixXd normalize_scores(const ScoreMatrix& scores) {
    const ClassLayout& layout = scores.layout;
    const double n = static_cast<double>(layout.total());
    MatrixXd Fhat = scores.unlabelled_block();
    for (int k = 0; k < layout.num_classes(); ++k)
        Fhat.col(k) *= n / static_cast<double>(layout.labelled(k));
    return Fhat;
}

MatrixXd center_scores(const MatrixXd& block) {
    return block.colwise() - block.rowwise().mean();
}

std::vector<int> classify(const MatrixXd& scores) {
    std::vector<int> out(scores.rows());
    for (Index i = 0; i < scores.rows(); ++i) {
        int best = 0;
        for (Index k = 1; k < scores.cols(); ++k)
            if (scores(i, k) > scores(i, best)) best = static_cast<int>(k);
        out[i] = best;
    }
    return out;
}

Metrics metrics(const std::vector<int>& predicted, const std::vector<int>& truth,
                int num_classes) {
    if (predicted.size() != truth.size())
        throw std::invalid_argument("metrics: prediction/truth length mismatch");
    VectorXd tp = VectorXd::Zero(num_classes);
    VectorXd pred_count = VectorXd::Zero(num_classes);
    VectorXd truth_count = VectorXd::Zero(num_classes);
    Index correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        pred_count(predicted[i]) += 1.0;
        truth_count(truth[i]) += 1.0;
        if (predicted[i] == truth[i]) {
            tp(truth[i]) += 1.0;
            ++correct;
        }
    }
    Metrics m;
    m.accuracy = truth.empty() ? 0.0 : static_cast<double>(correct) / truth.size();
    m.precision = VectorXd::Zero(num_classes);
    m.recall = VectorXd::Zero(num_classes);
    for (int k = 0; k < num_classes; ++k) {
        m.precision(k) = pred_count(k) > 0 ? tp(k) / pred_count(k) : 0.0;
        m.recall(k) = truth_count(k) > 0 ? tp(k) / truth_count(k) : 0.0;
    }
    m.average_precision = m.precision.mean();
    return m;
}

void write_scores_csv(const std::string& path, const MatrixXd& block,
                      Index first_node_index) {
    CsvWriter csv(path);
    std::vector<std::string> cols = {"node_index"};
    for (Index k = 1; k <= block.cols(); ++k)
        cols.push_back("class_" + std::to_string(k));
    csv.header(cols);
    for (Index i = 0; i < block.rows(); ++i) {
        auto row = csv.row();
        row.add(static_cast<std::int64_t>(first_node_index + i));
        for (Index k = 0; k < block.cols(); ++k) row.add(block(i, k));
    }
}

} // namespace gssl

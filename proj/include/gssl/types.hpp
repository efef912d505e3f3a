#pragma once

#include <Eigen/Dense>

#include <numeric>
#include <vector>

#include "gssl/errors.hpp"

namespace gssl {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;
using VectorXi = Vector<int>;
using Index = Eigen::Index;

/// Per-class labelled/unlabelled counts plus the derived size ratios.
///
/// Rows of a dataset are arranged in blocks: first all labelled samples
/// grouped by class, then all unlabelled samples grouped by class. All
/// block boundaries are derivable from the counts alone.
class ClassLayout {
public:
    ClassLayout(std::vector<Index> labelled, std::vector<Index> unlabelled)
        : n_l_(std::move(labelled)), n_u_(std::move(unlabelled)) {
        if (n_l_.empty() || n_l_.size() != n_u_.size())
            throw std::invalid_argument("ClassLayout: class count mismatch");
        for (std::size_t k = 0; k < n_l_.size(); ++k) {
            if (n_l_[k] < 1 || n_u_[k] < 1)
                throw std::invalid_argument(
                    "ClassLayout: every class needs at least one labelled and one "
                    "unlabelled sample");
        }
    }

    int num_classes() const { return static_cast<int>(n_l_.size()); }

    Index labelled(int k) const { return n_l_.at(k); }
    Index unlabelled(int k) const { return n_u_.at(k); }
    Index class_total(int k) const { return labelled(k) + unlabelled(k); }

    Index labelled_total() const {
        return std::accumulate(n_l_.begin(), n_l_.end(), Index{0});
    }
    Index unlabelled_total() const {
        return std::accumulate(n_u_.begin(), n_u_.end(), Index{0});
    }
    Index total() const { return labelled_total() + unlabelled_total(); }

    /// Row offset of the labelled block of class k.
    Index labelled_offset(int k) const {
        Index off = 0;
        for (int j = 0; j < k; ++j) off += n_l_[j];
        return off;
    }
    /// Row offset of the unlabelled block of class k (in absolute rows).
    Index unlabelled_offset(int k) const {
        Index off = labelled_total();
        for (int j = 0; j < k; ++j) off += n_u_[j];
        return off;
    }

    double c0(Index p) const { return static_cast<double>(p) / total(); }
    double c_l() const { return static_cast<double>(labelled_total()) / total(); }
    double c_u() const { return static_cast<double>(unlabelled_total()) / total(); }
    double c_k(int k) const { return static_cast<double>(class_total(k)) / total(); }
    double c_lk(int k) const { return static_cast<double>(labelled(k)) / total(); }
    double c_uk(int k) const { return static_cast<double>(unlabelled(k)) / total(); }

    /// Class index of an absolute row (labelled or unlabelled block).
    int class_of_row(Index i) const {
        Index off = 0;
        for (int k = 0; k < num_classes(); ++k) {
            off += n_l_[k];
            if (i < off) return k;
        }
        for (int k = 0; k < num_classes(); ++k) {
            off += n_u_[k];
            if (i < off) return k;
        }
        throw std::invalid_argument("ClassLayout: row index out of range");
    }

    /// True class per unlabelled row, in block order.
    std::vector<int> unlabelled_truth() const {
        std::vector<int> truth;
        truth.reserve(unlabelled_total());
        for (int k = 0; k < num_classes(); ++k)
            truth.insert(truth.end(), n_u_[k], k);
        return truth;
    }

    bool operator==(const ClassLayout& other) const {
        return n_l_ == other.n_l_ && n_u_ == other.n_u_;
    }

private:
    std::vector<Index> n_l_;
    std::vector<Index> n_u_;
};

/// A data matrix in the block ordering of ClassLayout: rows 0..n_l-1 are
/// labelled grouped by class, the rest unlabelled grouped by class.
struct LabelledSplit {
    MatrixXd X; // n x p, one sample per row
    ClassLayout layout;

    LabelledSplit(MatrixXd data, ClassLayout lay)
        : X(std::move(data)), layout(std::move(lay)) {
        if (X.rows() != layout.total())
            throw std::invalid_argument("LabelledSplit: row count does not match layout");
        if (!X.allFinite())
            throw std::invalid_argument("LabelledSplit: non-finite entries");
    }

    Index n() const { return X.rows(); }
    Index p() const { return X.cols(); }
};

/// One-hot labelled score block F_l (n_l x K) implied by a layout.
inline MatrixXd one_hot_labels(const ClassLayout& layout) {
    MatrixXd F = MatrixXd::Zero(layout.labelled_total(), layout.num_classes());
    for (int k = 0; k < layout.num_classes(); ++k)
        F.block(layout.labelled_offset(k), k, layout.labelled(k), 1).setOnes();
    return F;
}

} // namespace gssl

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gssl/types.hpp"

namespace gssl {

/// Record of how an external dataset was turned into a LabelledSplit:
/// the seed, the layout and the source-file row indices actually chosen,
/// in the block order of the split.
struct IngestManifest {
    std::uint64_t seed;
    std::vector<Index> selected_rows;
    std::vector<Index> labelled_counts;
    std::vector<Index> unlabelled_counts;
    std::vector<int> class_values; // original label values, one per class
    std::string images_path;
    std::string labels_path;
};

struct IngestResult {
    LabelledSplit split;
    IngestManifest manifest;
};

/// Reads IDX image/label files (big-endian magic 0x00000803 / 0x00000801),
/// selects `layout` rows per class uniformly at random without replacement
/// using `seed`, scales pixels to [0,1] by dividing by 255, and arranges
/// them in block order. classes[k] is the label value mapped to class k.
IngestResult ingest_idx(const std::string& images_path, const std::string& labels_path,
                        const std::vector<int>& classes, const ClassLayout& layout,
                        std::uint64_t seed);

/// Serialize / parse a manifest as a structured text (JSON) document.
std::string manifest_to_json(const IngestManifest& manifest);
IngestManifest manifest_from_json(const std::string& text);

/// tau_hat = (1/(n(n-1))) sum_{i != j} ||x_i - x_j||^2 / p.
double estimate_tau(const LabelledSplit& split);

/// Two-class labelled trace-gap estimate
///   (1/(2 sqrt(p))) ( S_1 / (n_l1 (n_l1 - 1)) - S_2 / (n_l2 (n_l2 - 1)) )
/// with S_a the sum of pairwise squared distances within labelled class a.
double estimate_delta_t(const LabelledSplit& split);

/// Per-class mean and unbiased covariance over ALL samples of the
/// requested classes in an IDX pair (used to parameterize the theory on
/// real data).
struct IdxClassMoments {
    std::vector<VectorXd> means;
    std::vector<MatrixXd> covariances;
    std::vector<Index> counts;
};

IdxClassMoments idx_class_moments(const std::string& images_path,
                                  const std::string& labels_path,
                                  const std::vector<int>& classes);

/// Labelled-sample means and covariance-trace statistics.
///   t_hat(a) = tr(Chat_a - sum_k w_k Chat_k) / sqrt(p)
/// with w_k = n_lk / n_l when tilde_centered, w_k = n_k / n otherwise.
///   T_hat(a,b) = tr(Chat_a Chat_b) / p, no cross-product bias correction.
struct ClassEmpiricalStats {
    std::vector<VectorXd> means;
    VectorXd t_hat;
    MatrixXd T_hat;
};

ClassEmpiricalStats class_empirical_stats(const LabelledSplit& split,
                                          bool tilde_centered = true);

} // namespace gssl

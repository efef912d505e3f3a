#include "gssl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gssl/rng.hpp"

namespace gssl {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (!in) throw format_error("unexpected end of IDX file: " + path);
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

} // namespace

IngestResult ingest_idx(const std::string& images_path, const std::string& labels_path,
                        const std::vector<int>& classes, const ClassLayout& layout,
                        std::uint64_t seed) {
    if (static_cast<int>(classes.size()) != layout.num_classes())
        throw std::invalid_argument("ingest_idx: classes/layout size mismatch");

    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw format_error("cannot open images file: " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw format_error("cannot open labels file: " + labels_path);

    const std::uint32_t img_magic = read_be32(img, images_path);
    if (img_magic != kImagesMagic) {
        std::ostringstream msg;
        msg << "bad IDX image magic 0x" << std::hex << img_magic << " in "
            << images_path;
        throw format_error(msg.str());
    }
    const std::uint32_t n_images = read_be32(img, images_path);
    const std::uint32_t rows = read_be32(img, images_path);
    const std::uint32_t cols = read_be32(img, images_path);

    const std::uint32_t lab_magic = read_be32(lab, labels_path);
    if (lab_magic != kLabelsMagic) {
        std::ostringstream msg;
        msg << "bad IDX label magic 0x" << std::hex << lab_magic << " in "
            << labels_path;
        throw format_error(msg.str());
    }
    const std::uint32_t n_labels = read_be32(lab, labels_path);
    if (n_labels != n_images) {
        std::ostringstream msg;
        msg << "IDX count mismatch: " << n_images << " images vs " << n_labels
            << " labels";
        throw consistency_error(msg.str());
    }

    std::vector<unsigned char> labels(n_labels);
    lab.read(reinterpret_cast<char*>(labels.data()), n_labels);
    if (!lab) throw format_error("truncated labels file: " + labels_path);

    // Source rows per requested class, in file order.
    std::vector<std::vector<Index>> pool(classes.size());
    for (std::uint32_t i = 0; i < n_labels; ++i)
        for (std::size_t k = 0; k < classes.size(); ++k)
            if (labels[i] == classes[k]) pool[k].push_back(i);

    NormalSampler rng(seed);
    std::vector<std::vector<Index>> chosen(classes.size());
    for (std::size_t k = 0; k < classes.size(); ++k) {
        const Index want = layout.labelled(static_cast<int>(k)) +
                           layout.unlabelled(static_cast<int>(k));
        if (static_cast<Index>(pool[k].size()) < want) {
            std::ostringstream msg;
            msg << "not enough samples with label " << classes[k] << ": have "
                << pool[k].size() << ", need " << want;
            throw capacity_error(msg.str());
        }
        // Partial Fisher-Yates: the first `want` entries are a uniform
        // draw without replacement.
        std::vector<Index>& src = pool[k];
        for (Index i = 0; i < want; ++i) {
            const Index j = i + static_cast<Index>(rng.uniform_below(src.size() - i));
            std::swap(src[i], src[j]);
        }
        chosen[k].assign(src.begin(), src.begin() + want);
    }

    const Index p = static_cast<Index>(rows) * static_cast<Index>(cols);
    MatrixXd X(layout.total(), p);
    IngestManifest manifest;
    manifest.seed = seed;
    manifest.images_path = images_path;
    manifest.labels_path = labels_path;
    manifest.class_values = classes;
    manifest.selected_rows.resize(layout.total());
    for (int k = 0; k < layout.num_classes(); ++k) {
        manifest.labelled_counts.push_back(layout.labelled(k));
        manifest.unlabelled_counts.push_back(layout.unlabelled(k));
    }

    std::vector<unsigned char> pixel(p);
    auto load_row = [&](Index src_row, Index dst_row) {
        img.seekg(16 + static_cast<std::streamoff>(src_row) * p);
        img.read(reinterpret_cast<char*>(pixel.data()), p);
        if (!img) throw format_error("truncated images file: " + images_path);
        for (Index j = 0; j < p; ++j) X(dst_row, j) = pixel[j] / 255.0;
        manifest.selected_rows[dst_row] = src_row;
    };
    for (int k = 0; k < layout.num_classes(); ++k) {
        const Index nl = layout.labelled(k);
        for (Index i = 0; i < nl; ++i)
            load_row(chosen[k][i], layout.labelled_offset(k) + i);
        for (Index i = 0; i < layout.unlabelled(k); ++i)
            load_row(chosen[k][nl + i], layout.unlabelled_offset(k) + i);
    }

    return IngestResult{LabelledSplit(std::move(X), layout), std::move(manifest)};
}

std::string manifest_to_json(const IngestManifest& manifest) {
    nlohmann::json j;
    j["seed"] = manifest.seed;
    j["selected_rows"] = manifest.selected_rows;
    j["labelled_counts"] = manifest.labelled_counts;
    j["unlabelled_counts"] = manifest.unlabelled_counts;
    j["class_values"] = manifest.class_values;
    j["images_path"] = manifest.images_path;
    j["labels_path"] = manifest.labels_path;
    return j.dump(2);
}

IngestManifest manifest_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    IngestManifest m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.selected_rows = j.at("selected_rows").get<std::vector<Index>>();
    m.labelled_counts = j.at("labelled_counts").get<std::vector<Index>>();
    m.unlabelled_counts = j.at("unlabelled_counts").get<std::vector<Index>>();
    m.class_values = j.at("class_values").get<std::vector<int>>();
    m.images_path = j.at("images_path").get<std::string>();
    m.labels_path = j.at("labels_path").get<std::string>();
    return m;
}

IdxClassMoments idx_class_moments(const std::string& images_path,
                                  const std::string& labels_path,
                                  const std::vector<int>& classes) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw format_error("cannot open images file: " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw format_error("cannot open labels file: " + labels_path);

    if (read_be32(img, images_path) != kImagesMagic)
        throw format_error("bad IDX image magic in " + images_path);
    const std::uint32_t n_images = read_be32(img, images_path);
    const std::uint32_t rows = read_be32(img, images_path);
    const std::uint32_t cols = read_be32(img, images_path);
    if (read_be32(lab, labels_path) != kLabelsMagic)
        throw format_error("bad IDX label magic in " + labels_path);
    const std::uint32_t n_labels = read_be32(lab, labels_path);
    if (n_labels != n_images)
        throw consistency_error("IDX count mismatch between images and labels");

    std::vector<unsigned char> labels(n_labels);
    lab.read(reinterpret_cast<char*>(labels.data()), n_labels);
    if (!lab) throw format_error("truncated labels file: " + labels_path);

    const Index p = static_cast<Index>(rows) * static_cast<Index>(cols);
    const int K = static_cast<int>(classes.size());
    std::vector<VectorXd> sum(K, VectorXd::Zero(p));
    std::vector<MatrixXd> sumsq(K, MatrixXd::Zero(p, p));
    std::vector<Index> count(K, 0);

    std::vector<unsigned char> pixel(p);
    VectorXd x(p);
    for (std::uint32_t i = 0; i < n_images; ++i) {
        img.read(reinterpret_cast<char*>(pixel.data()), p);
        if (!img) throw format_error("truncated images file: " + images_path);
        int k = -1;
        for (int c = 0; c < K; ++c)
            if (labels[i] == classes[c]) k = c;
        if (k < 0) continue;
        for (Index j = 0; j < p; ++j) x(j) = pixel[j] / 255.0;
        sum[k] += x;
        sumsq[k].selfadjointView<Eigen::Lower>().rankUpdate(x);
        ++count[k];
    }

    IdxClassMoments out;
    for (int k = 0; k < K; ++k) {
        if (count[k] < 2) {
            std::ostringstream msg;
            msg << "not enough samples with label " << classes[k]
                << " to estimate moments";
            throw capacity_error(msg.str());
        }
        const double m = static_cast<double>(count[k]);
        VectorXd mean = sum[k] / m;
        MatrixXd cov = MatrixXd(sumsq[k].selfadjointView<Eigen::Lower>());
        cov -= m * mean * mean.transpose();
        cov /= (m - 1.0);
        out.means.push_back(std::move(mean));
        out.covariances.push_back(std::move(cov));
        out.counts.push_back(count[k]);
    }
    return out;
}

namespace {

// sum_{i,j in block} ||x_i - x_j||^2 over ordered pairs (zero diagonal
// contributes nothing): 2 m sum_i ||x_i||^2 - 2 ||sum_i x_i||^2.
double pairwise_sq_sum(const Eigen::Ref<const MatrixXd>& block) {
    const double m = static_cast<double>(block.rows());
    const double sq = block.rowwise().squaredNorm().sum();
    const double mean_sq = block.colwise().sum().squaredNorm();
    return 2.0 * m * sq - 2.0 * mean_sq;
}

} // namespace

double estimate_tau(const LabelledSplit& split) {
    const Index n = split.n();
    if (n < 2) throw std::invalid_argument("estimate_tau: need at least two samples");
    const double total = pairwise_sq_sum(split.X);
    return total / (static_cast<double>(n) * static_cast<double>(n - 1) *
                    static_cast<double>(split.p()));
}

double estimate_delta_t(const LabelledSplit& split) {
    const ClassLayout& layout = split.layout;
    if (layout.num_classes() != 2)
        throw std::invalid_argument("estimate_delta_t: only defined for two classes");
    for (int k = 0; k < 2; ++k)
        if (layout.labelled(k) < 2)
            throw std::invalid_argument(
                "estimate_delta_t: each labelled class needs at least two samples");

    auto term = [&](int k) {
        const double m = static_cast<double>(layout.labelled(k));
        const double s = pairwise_sq_sum(
            split.X.middleRows(layout.labelled_offset(k), layout.labelled(k)));
        return s / (m * (m - 1.0));
    };
    return (term(0) - term(1)) / (2.0 * std::sqrt(static_cast<double>(split.p())));
}

ClassEmpiricalStats class_empirical_stats(const LabelledSplit& split,
                                          bool tilde_centered) {
    const ClassLayout& layout = split.layout;
    const int K = layout.num_classes();
    const Index p = split.p();

    std::vector<MatrixXd> cov(K);
    ClassEmpiricalStats out;
    out.means.resize(K);
    for (int k = 0; k < K; ++k) {
        const Index m = layout.labelled(k);
        if (m < 2)
            throw std::invalid_argument(
                "class_empirical_stats: singleton labelled class");
        const auto block = split.X.middleRows(layout.labelled_offset(k), m);
        out.means[k] = block.colwise().mean();
        const MatrixXd centered = block.rowwise() - out.means[k].transpose();
        cov[k] = centered.transpose() * centered / static_cast<double>(m - 1);
    }

    VectorXd trC(K);
    for (int k = 0; k < K; ++k) trC(k) = cov[k].trace();
    double tr_mean = 0.0;
    for (int k = 0; k < K; ++k) {
        const double w = tilde_centered
                             ? static_cast<double>(layout.labelled(k)) /
                                   static_cast<double>(layout.labelled_total())
                             : layout.c_k(k);
        tr_mean += w * trC(k);
    }
    out.t_hat.resize(K);
    for (int k = 0; k < K; ++k)
        out.t_hat(k) = (trC(k) - tr_mean) / std::sqrt(static_cast<double>(p));

    out.T_hat.resize(K, K);
    for (int a = 0; a < K; ++a)
        for (int b = 0; b <= a; ++b) {
            const double v = cov[a].cwiseProduct(cov[b]).sum() / static_cast<double>(p);
            out.T_hat(a, b) = v;
            out.T_hat(b, a) = v;
        }
    return out;
}

} // namespace gssl

#include "gssl/kernel.hpp"

#include <cmath>
#include <sstream>

namespace gssl {

KernelSpec gaussian_kernel(double sigma2) {
    if (!(sigma2 > 0.0))
        throw std::invalid_argument("gaussian_kernel: sigma2 must be positive");
    const double inv = 1.0 / (2.0 * sigma2);
    KernelSpec k;
    k.f = [inv](double t) { return std::exp(-t * inv); };
    k.df = [inv](double t) { return -inv * std::exp(-t * inv); };
    k.d2f = [inv](double t) { return inv * inv * std::exp(-t * inv); };
    std::ostringstream name;
    name << "gaussian{" << sigma2 << "}";
    k.name = name.str();
    return k;
}

KernelSpec quadratic_kernel(double tau_hat, double f0, double f1, double f2) {
    KernelSpec k;
    k.f = [=](double t) {
        const double u = t - tau_hat;
        return f0 + f1 * u + 0.5 * f2 * u * u;
    };
    k.df = [=](double t) { return f1 + f2 * (t - tau_hat); };
    k.d2f = [f2](double) { return f2; };
    std::ostringstream name;
    name << "quad{" << f0 << "," << f1 << "," << f2 << "}@" << tau_hat;
    k.name = name.str();
    return k;
}

std::pair<double, double> derivative_check(const KernelSpec& kernel, double t,
                                           double step) {
    const double fp = (kernel.f(t + step) - kernel.f(t - step)) / (2.0 * step);
    const double fpp =
        (kernel.f(t + step) - 2.0 * kernel.f(t) + kernel.f(t - step)) / (step * step);
    const double d1 = kernel.df(t);
    const double d2 = kernel.d2f(t);
    const double scale1 = std::max(std::abs(d1), 1e-12);
    const double scale2 = std::max(std::abs(d2), 1e-12);
    return {std::abs(fp - d1) / scale1, std::abs(fpp - d2) / scale2};
}

MatrixXd squared_distance_matrix(const MatrixXd& X) {
    const Index n = X.rows();
    const double invp = 1.0 / static_cast<double>(X.cols());
    const VectorXd sq = X.rowwise().squaredNorm();
    MatrixXd G = X * X.transpose();
    MatrixXd D2(n, n);
    for (Index j = 0; j < n; ++j) {
        D2(j, j) = 0.0;
        for (Index i = 0; i < j; ++i) {
            double d = (sq(i) + sq(j) - 2.0 * G(i, j)) * invp;
            if (d < 0.0) d = 0.0; // rounding guard
            D2(i, j) = d;
            D2(j, i) = d;
        }
    }
    return D2;
}

MatrixXd weight_matrix_from_distances(const MatrixXd& D2, const KernelSpec& kernel) {
    const Index n = D2.rows();
    MatrixXd W(n, n);
    const double w0 = kernel.f(0.0);
    for (Index j = 0; j < n; ++j) {
        W(j, j) = w0;
        for (Index i = 0; i < j; ++i) {
            const double w = kernel.f(D2(i, j));
            if (!std::isfinite(w)) {
                std::ostringstream msg;
                msg << "weight_matrix: non-finite kernel value at pair (" << i << ","
                    << j << "), argument " << D2(i, j);
                throw numeric_error(msg.str());
            }
            W(i, j) = w;
            W(j, i) = w;
        }
    }
    if (!std::isfinite(w0)) throw numeric_error("weight_matrix: f(0) not finite");
    return W;
}

MatrixXd weight_matrix(const LabelledSplit& split, const KernelSpec& kernel) {
    return weight_matrix_from_distances(squared_distance_matrix(split.X), kernel);
}

VectorXd degree_vector(const MatrixXd& W) {
    if (W.rows() != W.cols())
        throw std::invalid_argument("degree_vector: W must be square");
    VectorXd d = W.rowwise().sum();
    for (Index i = 0; i < d.size(); ++i) {
        if (!(d(i) > 0.0)) {
            std::ostringstream msg;
            msg << "degree_vector: nonpositive degree " << d(i) << " at node " << i;
            throw degeneracy_error(msg.str());
        }
    }
    return d;
}

KernelConditions check_conditions(const KernelSpec& kernel, double tau_hat) {
    KernelConditions c;
    c.f_value = kernel.f(tau_hat);
    c.df_value = kernel.df(tau_hat);
    c.d2f_value = kernel.d2f(tau_hat);
    c.df_negative = c.df_value < 0.0;
    c.d2f_positive = c.d2f_value > 0.0;
    c.product = c.d2f_value * c.f_value > c.df_value * c.df_value;
    return c;
}

} // namespace gssl

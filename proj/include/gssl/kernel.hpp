#pragma once

#include <functional>
#include <string>

#include "gssl/types.hpp"

namespace gssl {

/// A radial kernel f applied to squared distances ||x_i - x_j||^2 / p,
/// carried together with its closed-form first and second derivatives
/// (never numerically differentiated).
struct KernelSpec {
    std::function<double(double)> f;
    std::function<double(double)> df;
    std::function<double(double)> d2f;
    std::string name;
};

/// Heat kernel f(t) = exp(-t / (2 sigma2)).
KernelSpec gaussian_kernel(double sigma2);

/// Quadratic kernel expanded around tau_hat:
///   f(t) = f0 + f1 (t - tau_hat) + (f2/2) (t - tau_hat)^2
/// so that f(tau_hat) = f0, f'(tau_hat) = f1, f''(tau_hat) = f2.
KernelSpec quadratic_kernel(double tau_hat, double f0, double f1, double f2);

/// Relative mismatch of central finite differences against df/d2f at t.
/// Returns {err_first, err_second}; both should be below ~1e-5 for a
/// correctly specified kernel.
std::pair<double, double> derivative_check(const KernelSpec& kernel, double t,
                                           double step = 1e-4);

/// Pairwise squared distances ||x_i - x_j||^2 / p, exact zero diagonal,
/// symmetric by construction. Kept separate from weight_matrix so kernel
/// sweeps over the same data reuse it.
MatrixXd squared_distance_matrix(const MatrixXd& X);

/// W_ij = f(||x_i - x_j||^2 / p); the diagonal is f(0). Upper triangle is
/// computed and mirrored so W is exactly symmetric.
MatrixXd weight_matrix_from_distances(const MatrixXd& D2, const KernelSpec& kernel);
MatrixXd weight_matrix(const LabelledSplit& split, const KernelSpec& kernel);

/// Node degrees d_i = sum_j W_ij. Throws degeneracy_error (with the node
/// index) if any degree is nonpositive, since D^alpha needs d_i > 0.
VectorXd degree_vector(const MatrixXd& W);

/// The two-class discrimination conditions evaluated at tau_hat.
/// `product` uses the strict inequality f''(t) f(t) > f'(t)^2 with zero
/// tolerance, so the heat kernel (equality) deterministically fails it.
struct KernelConditions {
    double f_value;
    double df_value;
    double d2f_value;
    bool df_negative;   // f'(tau) < 0
    bool d2f_positive;  // f''(tau) > 0
    bool product;       // f''(tau) f(tau) > f'(tau)^2
};

KernelConditions check_conditions(const KernelSpec& kernel, double tau_hat);

} // namespace gssl

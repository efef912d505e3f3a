#pragma once

#include <stdexcept>
#include <string>

namespace gssl {

/// Base class for all library errors.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Problems with user-supplied inputs (files, configs, layouts).
/// The CLI maps these to exit code 2.
struct input_error : error {
    using error::error;
};

struct format_error : input_error {
    using input_error::input_error;
};

struct capacity_error : input_error {
    using input_error::input_error;
};

struct consistency_error : input_error {
    using input_error::input_error;
};

/// Numerical failures discovered while running. Exit code 3 in the CLI.
struct numeric_error : error {
    using error::error;
};

/// A nonpositive degree makes fractional powers of D undefined.
struct degeneracy_error : numeric_error {
    using numeric_error::numeric_error;
};

struct solver_error : numeric_error {
    using numeric_error::numeric_error;
};

struct convergence_error : numeric_error {
    using numeric_error::numeric_error;
};

/// Raised when the balance point is undefined (t1 == t2) or an estimate
/// divides by a vanishing statistic.
struct balance_error : numeric_error {
    using numeric_error::numeric_error;
};

struct ill_conditioned_error : numeric_error {
    using numeric_error::numeric_error;
};

} // namespace gssl

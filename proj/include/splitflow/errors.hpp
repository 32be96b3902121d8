#pragma once

#include <stdexcept>
#include <string>

namespace splitflow {

// Violated precondition or infeasible parameter set. The message names the
// constraint that failed (e.g. "gamma+delta_space+theta < 1/4"). The CLI maps
// this to exit code 2.
struct constraint_error : std::invalid_argument {
    explicit constraint_error(const std::string& what) : std::invalid_argument(what) {}
};

// Numerical breakdown (quadrature non-convergence, non-finite result).
// The CLI maps this to exit code 3.
struct numerical_error : std::runtime_error {
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace splitflow

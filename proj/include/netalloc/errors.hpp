#pragma once

#include <stdexcept>
#include <string>

namespace netalloc {

// Malformed or inconsistent user input (bad file, bad bounds, bad flag).
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The requested allocation problem has no feasible point.
struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An iterative method ran out of iterations before reaching its tolerance.
struct ConvergenceError : std::runtime_error {
    ConvergenceError(const std::string& what, double best_residual)
        : std::runtime_error(what), residual(best_residual) {}
    double residual;
};

}  // namespace netalloc

#pragma once

#include <stdexcept>
#include <string>

namespace multifrac {

// Invalid solver/experiment configuration (rejected before any work starts).
struct ConfigError : std::invalid_argument {
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// An iterative scheme failed to reach its tolerance within its budget.
struct ConvergenceError : std::runtime_error {
    explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

// A computed quantity violated a structural guarantee (non-finite value,
// indefinite covariance beyond the jitter budget, broken a-priori envelope).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace multifrac

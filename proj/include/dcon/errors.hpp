#pragma once

#include <stdexcept>
#include <string>

namespace dcon {

// Bad input, malformed file, or a violated precondition. The CLI maps this to exit code 2.
struct validation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Solver breakdown: non-finite iterate, non-converged QP where one is required,
// or a broken descent invariant. Exit code 3.
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace dcon

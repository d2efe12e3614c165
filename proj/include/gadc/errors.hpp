#pragma once

#include <stdexcept>
#include <string>

namespace gadc {

// Error hierarchy mirrors the CLI exit codes:
//   check_failure -> 1, input_error/domain_error -> 2,
//   capacity_error -> 3, numeric_error -> 4.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or out-of-range input data (bad edge list, shape mismatch, ...).
struct input_error : error {
    using error::error;
};

// Operation invoked outside its domain (negative entries where nonnegative
// required, empty split, non-binary features for flip noise, ...).
struct domain_error : error {
    using error::error;
};

// Problem size exceeds a configured cap (dense Gram cap, oracle cap).
struct capacity_error : error {
    using error::error;
};

// Non-finite intermediate, singular system, diverging optimization.
struct numeric_error : error {
    using error::error;
};

// A verification check did not hold.
struct check_failure : error {
    using error::error;
};

inline int exit_code_for(const error& e) {
    if (dynamic_cast<const check_failure*>(&e)) return 1;
    if (dynamic_cast<const capacity_error*>(&e)) return 3;
    if (dynamic_cast<const numeric_error*>(&e)) return 4;
    return 2;
}

} // namespace gadc

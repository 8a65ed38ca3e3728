#pragma once

#include <stdexcept>

namespace mcrelab {

// Malformed or rejected experiment configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A model failed its standing-assumption verification (CLI exit code 3).
struct AssumptionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A built-in correctness assertion did not hold (CLI exit code 4).
struct CheckError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace mcrelab

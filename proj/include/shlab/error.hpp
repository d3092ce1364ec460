#pragma once

#include <stdexcept>
#include <string>

namespace shlab {

// Error categories map one-to-one onto the C API status codes and the CLI
// exit codes (validation = 2, numerical = 3, hypothesis = 4).

class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// A computation ran but its result cannot be trusted: non-convergence,
// ladder divergence where a limit is required, monotonicity violations.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// The hypothesis of an experiment is not met (e.g. the potential is not
// form bounded), so the experiment refuses to run.
class HypothesisError : public std::runtime_error {
public:
    explicit HypothesisError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw ValidationError(message);
}

} // namespace shlab

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dems {

/// Precondition or input-shape violation. Maps to CLI exit code 1.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A matrix that should be invertible (or finite after scaling) is not.
class ConditioningError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An estimator or simulator produced non-finite or runaway values.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, std::size_t step)
        : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) {
        throw ValidationError(message);
    }
}

} // namespace dems

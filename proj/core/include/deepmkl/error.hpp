#pragma once

#include <stdexcept>
#include <string>

namespace deepmkl {

/// Malformed input: bad files, shape mismatches, violated preconditions.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation produced a non-finite value or hit a singular system.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The SVM solver hit its iteration cap.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double max_violation)
        : std::runtime_error(what), max_violation_(max_violation) {}

    double max_violation() const noexcept { return max_violation_; }

private:
    double max_violation_;
};

}  // namespace deepmkl

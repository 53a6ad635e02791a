#pragma once

#include <stdexcept>
#include <string>

namespace acim {

// Bad argument values: malformed rationals, points outside [0,1], weights
// that do not sum to one, envelopes out of order, and similar.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Structural failures discovered while deriving something from otherwise
// well-formed inputs: a partition that never closes under images, a branch
// image that is not a union of cells, a distribution that cannot be inverted.
class StructureError : public std::runtime_error {
public:
    explicit StructureError(const std::string& msg) : std::runtime_error(msg) {}
};

// An iterative scheme ran out of budget before reaching its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    explicit ConvergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

// A property that the construction guarantees failed to hold numerically.
// Reaching this is a bug in the library or an input outside its contract.
class InternalCheckError : public std::logic_error {
public:
    explicit InternalCheckError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace acim

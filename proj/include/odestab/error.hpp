#pragma once

#include <stdexcept>
#include <string>

namespace odestab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised by the system-definition parser; positions are 1-based.
struct ParseError : Error {
    int line;
    int col;
    ParseError(const std::string& what, int line_, int col_)
        : Error(what + " (line " + std::to_string(line_) + ", col " + std::to_string(col_) + ")"),
          line(line_), col(col_) {}
};

// Raised when an expression cannot be evaluated at the given point:
// unbound variable, ln/sqrt/division domain violation, or a non-finite result.
struct EvalError : Error {
    using Error::Error;
};

struct LinalgError : Error {
    using Error::Error;
};

struct SingularMatrixError : LinalgError {
    using LinalgError::LinalgError;
};

struct ConvergenceError : LinalgError {
    using LinalgError::LinalgError;
};

// Adaptive integrator needed a step below the floor.
struct StiffnessError : Error {
    using Error::Error;
};

// A point handed to classify_local / remainder_check is not an equilibrium.
struct NotEquilibriumError : Error {
    using Error::Error;
};

}  // namespace odestab

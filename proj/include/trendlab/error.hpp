#pragma once

#include <stdexcept>
#include <string>

namespace trendlab {

/// Base of every error the library throws. `exit_code()` is what the CLI
/// returns when the error escapes a command.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 1; }
    virtual const char* kind() const noexcept { return "error"; }
};

/// Invalid parameter or configuration (exit code 2).
class ParameterError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
    const char* kind() const noexcept override { return "config"; }
};

/// A correlation matrix that is not symmetric, unit-diagonal and PSD.
class MatrixValidityError : public ParameterError {
public:
    using ParameterError::ParameterError;
    const char* kind() const noexcept override { return "matrix_validity"; }
};

/// Malformed or unusable input data (exit code 3).
class DataError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
    const char* kind() const noexcept override { return "data"; }
};

class InsufficientDataError : public DataError {
public:
    using DataError::DataError;
    const char* kind() const noexcept override { return "insufficient_data"; }
};

/// Numerical failure: singular matrices, non-convergence (exit code 4).
class NumericalError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 4; }
    const char* kind() const noexcept override { return "numerical"; }
};

class SingularMatrixError : public NumericalError {
public:
    using NumericalError::NumericalError;
    const char* kind() const noexcept override { return "singular_matrix"; }
};

class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, std::string diagnostics)
        : NumericalError(what), diagnostics_(std::move(diagnostics)) {}
    const char* kind() const noexcept override { return "convergence"; }
    const std::string& diagnostics() const noexcept { return diagnostics_; }

private:
    std::string diagnostics_;
};

}  // namespace trendlab

#pragma once

#include <stdexcept>
#include <string>

namespace bc {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed input file or potential specification.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Base for failures of a numerical procedure on valid input.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// 0 is a Dirichlet eigenvalue of -Δ+q, so the potential is not admissible.
class ResonanceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// A perturbation series was requested outside its proven convergence range.
class ConvergenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class TruncationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class StiffnessError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SingularSystemError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class OverflowError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class AccuracyError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

} // namespace bc

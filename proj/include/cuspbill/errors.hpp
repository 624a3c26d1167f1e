#pragma once

#include <stdexcept>
#include <string>

namespace cuspbill {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input outside the documented domain of an operation (x < 0, NaN, r > 0 ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A configuration or CLI argument failed validation.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Base for failures of a numerical procedure on otherwise valid input.
class NumericalError : public Error {
public:
    using Error::Error;
};

class BracketFailure : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NoTangentInDomain : public NumericalError {
public:
    explicit NoTangentInDomain(double root)
        : NumericalError("tangent point outside the table (x_t = " + std::to_string(root) + ")"),
          root_(root) {}
    /// Where the unconstrained solution lies (negative).
    [[nodiscard]] double root() const noexcept { return root_; }

private:
    double root_;
};

class VertexHit : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NoCollision : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Orbit meets a tangency or a corner before reaching the target section.
class SingularOrbit : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ExcursionCap : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// The entering recursion has no forward solution: the trajectory turns.
class TurnReached : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class MarksUndefined : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class InsufficientRange : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class InsufficientData : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SingularityStraddle : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class StripNotFound : public NumericalError {
public:
    using NumericalError::NumericalError;
};

} // namespace cuspbill

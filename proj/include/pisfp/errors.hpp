#pragma once

#include <stdexcept>
#include <string>

namespace pisfp {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input problems.
class ParseError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class MissingOutcomeValues : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ShapeMismatch : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class UnsupportedDimension : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Numerical failures.
class NumericalError : public Error {
public:
    using Error::Error;
};

class NumericalBreakdown : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NotInvertible : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NegativeRecovery : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DegenerateSimplex : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DomainError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class InfeasibleStart : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class EmptyFeasibleRegion : public Error {
public:
    using Error::Error;
};

} // namespace pisfp

#pragma once

#include <stdexcept>
#include <string>

namespace isal {

// Root of every library error. The CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Coincident nodes, zero-length links.
class DegenerateGeometryError : public Error {
public:
    using Error::Error;
};

// Scene / parameter / config validation failures.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Malformed or inconsistent scenario file; the message names the field path.
class ConfigError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Operation requested in the wrong synchronization mode.
class ModeError : public Error {
public:
    using Error::Error;
};

// Mismatched vector / matrix dimensions.
class DimensionError : public Error {
public:
    using Error::Error;
};

// The requested parameter group has a singular information matrix.
class NonIdentifiableError : public Error {
public:
    using Error::Error;
};

// Empty feasible set, bad budget or caps.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

// Numeric breakdown that is neither a modelling nor an input problem.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace isal

#ifndef AIRTEMP_CORE_ERRORS_HPP
#define AIRTEMP_CORE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace airtemp {

// Base of every error raised by the library. CLI code maps these to
// nonzero exit codes with the message on stderr.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor/grid shape disagreement.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Operation called out of order (backward without forward, adam_step
// without gradients, ...).
class StateError : public Error {
public:
    using Error::Error;
};

// Out-of-bounds pixel or channel access.
class IndexError : public Error {
public:
    using Error::Error;
};

// Input that is structurally valid but has no usable content
// (empty mask, empty metric vectors, zero-variance r2 denominator).
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

// Invalid run or training configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Missing or malformed input data (bad CSV row, missing aux layer).
class DataError : public Error {
public:
    using Error::Error;
};

// Training produced a non-finite loss; message names the epoch.
class DivergenceError : public Error {
public:
    using Error::Error;
};

// Interval calibration cannot reach the requested coverage.
class CalibrationError : public Error {
public:
    using Error::Error;
};

// File-level failures, with distinct subtypes for the grid format.
class IoError : public Error {
public:
    using Error::Error;
};

class BadMagicError : public IoError {
public:
    using IoError::IoError;
};

class TruncatedFileError : public IoError {
public:
    using IoError::IoError;
};

class VersionMismatchError : public IoError {
public:
    using IoError::IoError;
};

// Unsatisfiable synthetic scene specification.
class SpecError : public Error {
public:
    using Error::Error;
};

} // namespace airtemp

#endif

#pragma once

#include <stdexcept>
#include <string>

namespace ratebench {

/// Base of every error raised by the library. The CLI maps these onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File cannot be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed input file content (bad CSV/JSON row, out-of-range field).
class FormatError : public Error {
public:
    using Error::Error;
};

/// A caller passed a value outside the operation's domain.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Data does not satisfy an operation's precondition (empty corpus, single-class labels, ...).
class DataError : public Error {
public:
    using Error::Error;
};

/// Run configuration or scoring table is inconsistent.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace ratebench

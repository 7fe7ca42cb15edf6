#pragma once

#include <stdexcept>
#include <string>

namespace compbench {

/// Base of every error raised by the library. Each subclass maps to a CLI exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Value outside a declared range (attribute bins, class indices).
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Bad argument to an operation (wrong sizes, invalid bounds, misuse).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Cross-file or cross-record inconsistency: dangling ids, missing embeddings.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents (bad magic, truncated records, bad header).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Input for which the requested quantity is undefined (zero norm, constant design).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Configuration schema violation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An upstream pipeline artifact does not exist yet.
class MissingDependency : public Error {
 public:
  using Error::Error;
};

/// Non-finite values during training.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace compbench

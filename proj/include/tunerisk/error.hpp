#pragma once

#include <stdexcept>
#include <string>

namespace tunerisk {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration space, plan, or option.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data that violates a declared constraint (bad row, bad value).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A computation whose preconditions on the data are not met.
class DataError : public Error {
 public:
  using Error::Error;
};

/// File system failure (missing file, unwritable directory).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace tunerisk

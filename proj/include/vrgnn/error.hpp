#pragma once

#include <stdexcept>
#include <string>

namespace vrgnn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or unreadable dataset / checkpoint content.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Tensor shape or index mismatch.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration values, unknown keys, bad flags.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Training diverged or a quantity became non-finite.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace vrgnn

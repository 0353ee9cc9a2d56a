#pragma once

#include <stdexcept>
#include <string>

namespace gatr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition violated by a caller-supplied value (bad grade, zero normal, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Tensor or parameter shapes do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, singular versors, points at infinity.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// File format or filesystem problems.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace gatr

#pragma once

#include <stdexcept>
#include <string>

namespace psdf {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent inputs (shapes, files, configs).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Tensor shape mismatch inside an op.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values during optimization or evaluation.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Geometric preconditions violated (degenerate scene, point behind camera, ...).
class GeometryError : public Error {
 public:
  using Error::Error;
};

}  // namespace psdf

#pragma once

#include <stdexcept>
#include <string>

namespace emofuse {

/// Base class for every error raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Tensor or operation dimensions do not line up.
struct ShapeError : Error {
  using Error::Error;
};

/// Invalid setting, argument, or hyperparameter.
struct ConfigError : Error {
  using Error::Error;
};

/// Malformed input file (bad chunk, codec, header, ...).
struct FormatError : Error {
  using Error::Error;
};

/// Failed read or write.
struct IoError : Error {
  using Error::Error;
};

/// Non-finite value where a finite one is required.
struct NumericError : Error {
  using Error::Error;
};

/// Optimizer or model state inconsistent with its parameters.
struct StateError : Error {
  using Error::Error;
};

/// Geometry out of bounds (e.g. face box outside its frame).
struct GeometryError : Error {
  using Error::Error;
};

/// API misuse, e.g. backward on a non-scalar.
struct UsageError : Error {
  using Error::Error;
};

}  // namespace emofuse

#pragma once

#include <stdexcept>
#include <string>

namespace plab {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes that do not compose, or sizes the algorithm cannot handle.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Out-of-range scale, step size, count or similar numeric parameter.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Invalid call argument that is not a shape or numeric parameter problem.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Unknown architecture, descriptor, or config key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unsupported file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Non-finite intermediate result.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace plab

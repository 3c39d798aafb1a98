#pragma once

#include <stdexcept>
#include <string>

namespace burstsr {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file contents (bad magic, unsupported dtype, wrong PNG layout).
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Image dimensions incompatible with an operator (odd Bayer plane, scale
/// not dividing the image, ...).
class DimensionError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class AlignmentError : public Error {
 public:
  using Error::Error;
};

/// Requested an operation the component cannot provide, e.g. the value of a
/// plug-and-play prior that has no closed-form functional.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace burstsr

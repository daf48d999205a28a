#pragma once

#include <stdexcept>
#include <string>

namespace sosest {

/// Invalid argument to an operation (bad index, mismatched shapes, ...).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid or inconsistent configuration. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure: singular systems, non-finite objectives, failed fits.
/// Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A required input file or directory is missing. Maps to CLI exit code 4.
class MissingInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientDataError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class RankDeficiencyError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// No valid delay nodes fell inside the polar ROI.
class EmptyPatternError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Fitted calibration polynomial is not monotonic over its domain.
class CalibrationError : public NumericalError {
 public:
  CalibrationError(const std::string& what, double lo, double hi)
      : NumericalError(what), interval_lo(lo), interval_hi(hi) {}
  double interval_lo;
  double interval_hi;
};

/// Observed slope cannot be inverted by the calibration model.
class OutOfRangeError : public NumericalError {
 public:
  OutOfRangeError(const std::string& what, double nearest)
      : NumericalError(what), nearest_delta_c(nearest) {}
  double nearest_delta_c;
};

}  // namespace sosest

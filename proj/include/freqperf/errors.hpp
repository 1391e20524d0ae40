#pragma once

#include <stdexcept>
#include <string>

namespace freqperf {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed graphs, parameters, configs, or violated
/// preconditions. The CLI maps these to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine could not deliver a trustworthy answer. The CLI maps
/// these to exit code 2.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class InvalidSizeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ConnectivityError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class WeightError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DuplicateEdgeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class EdgeIndexError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ParameterError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A closed-form result was requested outside the regime it was derived for
/// (non-uniform parameters, heterogeneous costs, ...).
class AssumptionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class StabilityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class VerificationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class StepSizeError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DivergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace freqperf

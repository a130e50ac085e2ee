#pragma once

#include <stdexcept>
#include <string>

namespace babc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A covariance matrix stayed indefinite after the full jitter ladder.
class IllConditionedError : public Error {
 public:
  using Error::Error;
};

class DegenerateWeightsError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class SimulationError : public Error {
 public:
  using Error::Error;
};

/// Generic numerical failure (optimiser found nothing finite, etc).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace babc

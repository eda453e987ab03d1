#pragma once

#include <stdexcept>
#include <string>

namespace bsq {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched vector/matrix dimensions between related quantities.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A requested construction exceeds a configured size cap.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// A point set is not unisolvent for the requested basis.
class RankError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: indefinite covariance, failed factorization,
/// or an expected-model-variance below the roundoff tolerance.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A nonlinearity returned a non-finite value at a sigma-point.
class IntegrandError : public Error {
 public:
  using Error::Error;
};

/// Ground-truth simulation left its physical domain.
class SimulationError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace bsq

#pragma once

#include <stdexcept>
#include <string>

namespace homsim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numeric argument outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data: grids, sample tables, files.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Material model evaluated outside its validity range.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Iterative or adaptive procedure failed to converge.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Interferogram does not have the feature shape an analysis expects.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

/// Scenario configuration rejected.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace homsim

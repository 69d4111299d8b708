#pragma once

#include <stdexcept>
#include <string>

namespace toa {

/// Argument outside the domain an operation is defined on.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A computation could not reach its accuracy target and no flag can carry it.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two states built on different grids were combined.
class GridMismatch : public std::invalid_argument {
 public:
  GridMismatch() : std::invalid_argument("states live on different grids") {}
};

/// A regenerated fixture moved by more than its tolerance.
class FixtureMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace toa

#pragma once

#include <stdexcept>
#include <string>

namespace gbridge {

/// Argument outside the state set or a non-neighbor pair.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Mismatched sizes between grids, innovations or matrices.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Geometric degeneracy (collinear or duplicate input points).
class DegeneracyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Problem size beyond what a dense oracle supports.
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// A weight integral that diverges (path does not end at the target).
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every weight is zero or invalid.
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller-supplied function does not honor its documented contract.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// M(t)^{-1} is numerically singular where it must be positive definite.
class ConditioningError : public std::runtime_error {
 public:
  ConditioningError(const std::string& what, double smallest_eigenvalue)
      : std::runtime_error(what + " (smallest eigenvalue " +
                           std::to_string(smallest_eigenvalue) + ")"),
        smallest_eigenvalue_(smallest_eigenvalue) {}

  double smallest_eigenvalue() const noexcept { return smallest_eigenvalue_; }

 private:
  double smallest_eigenvalue_;
};

}  // namespace gbridge

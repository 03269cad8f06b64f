#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ssep {

// A = sigma^-2 X'X + diag(site precisions) failed to factor.
class NotPositiveDefinite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ConstraintKind { equality, inequality };

class ConstraintViolation : public std::domain_error {
 public:
  ConstraintViolation(ConstraintKind kind, const std::string& what)
      : std::domain_error(what), kind_(kind) {}
  ConstraintKind kind() const noexcept { return kind_; }

 private:
  ConstraintKind kind_;
};

// A quantity that must be finite (or positive) under the stated
// preconditions was not.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Multipliers recovered from an inner solution have the wrong sign.
class NonKktPoint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The outer loop of the double-loop solver increased the energy.
class DescentViolation : public std::runtime_error {
 public:
  DescentViolation(std::size_t iteration, double before, double after,
                   const std::string& what)
      : std::runtime_error(what),
        iteration_(iteration),
        before_(before),
        after_(after) {}
  std::size_t iteration() const noexcept { return iteration_; }
  double before() const noexcept { return before_; }
  double after() const noexcept { return after_; }

 private:
  std::size_t iteration_;
  double before_;
  double after_;
};

}  // namespace ssep

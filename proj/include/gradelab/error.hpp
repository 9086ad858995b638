#pragma once

#include <stdexcept>
#include <string>

namespace gradelab {

/// Raised when an operation is called outside its domain (bad region,
/// wrong parity, support mismatch, ...).
class PreconditionError : public std::invalid_argument {
 public:
  explicit PreconditionError(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a numerical routine cannot deliver a trustworthy result
/// (singular state, non-convergence, positivity loss).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gradelab

#ifndef TREECUT_ERRORS_HPP
#define TREECUT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace treecut {

// File could not be opened, read, or written.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Input data violates a documented schema or structural invariant.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// A configured resource cap was exceeded.
struct ResourceLimitError : std::runtime_error {
  explicit ResourceLimitError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical evaluation failed, e.g. a covariance that is not positive
// definite after regularization.
struct EvaluationError : std::runtime_error {
  explicit EvaluationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace treecut

#endif

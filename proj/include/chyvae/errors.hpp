#pragma once

#include <stdexcept>
#include <string>

namespace chyvae {

// Matrix failed a positive-definiteness test (Cholesky pivot <= 0).
struct NotPositiveDefinite : std::runtime_error {
  explicit NotPositiveDefinite(const std::string& what) : std::runtime_error(what) {}
};

// Argument outside the mathematical domain of the operation.
struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionMismatch : std::runtime_error {
  explicit DimensionMismatch(const std::string& what) : std::runtime_error(what) {}
};

// backward() was asked to differentiate a non-scalar node.
struct NotScalar : std::runtime_error {
  explicit NotScalar(const std::string& what) : std::runtime_error(what) {}
};

// A NaN/Inf gradient reached the optimizer; the step is aborted.
struct NonFiniteGradient : std::runtime_error {
  explicit NonFiniteGradient(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Bad magic, version, or truncated payload in a binary file.
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace chyvae

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rnimage {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (empty request, bad count, shape mismatch).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: loss of definiteness, non-convergence.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Cholesky met a non-positive pivot. Usually the basis is larger than the
/// measure can support, or the basis is badly conditioned for it.
class NotPositiveDefinite : public NumericError {
 public:
  explicit NotPositiveDefinite(std::size_t pivot)
      : NumericError("matrix is not positive definite (pivot " + std::to_string(pivot) + ")"),
        pivot_(pivot) {}

  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

/// Malformed or truncated image data, or a failed read/write.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace rnimage

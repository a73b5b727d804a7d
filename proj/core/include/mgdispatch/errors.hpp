#pragma once

#include <stdexcept>
#include <string>

namespace mgdispatch {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An iterative solve failed to reach its tolerance.
struct NonConvergence : Error {
  NonConvergence(int max_iter, double final_mismatch)
      : Error("power flow did not converge after " + std::to_string(max_iter) +
              " iterations, mismatch " + std::to_string(final_mismatch)),
        max_iter(max_iter),
        final_mismatch(final_mismatch) {}
  NonConvergence(const std::string& message, int iterations, double residual)
      : Error(message + " (after " + std::to_string(iterations) +
              " iterations, residual " + std::to_string(residual) + ")"),
        max_iter(iterations),
        final_mismatch(residual) {}
  int max_iter;
  double final_mismatch;
};

// The sensitivity linear system is singular at the operating point.
struct SingularSensitivity : Error {
  using Error::Error;
};

// Requested slack-voltage shift exceeds the first-order validity range.
struct OutOfLinearRange : Error {
  using Error::Error;
};

// Malformed input file.
struct SchemaError : Error {
  using Error::Error;
};

// Series or matrix dimensions inconsistent between inputs.
struct DimensionMismatch : Error {
  using Error::Error;
};

// NSAD denominator is zero.
struct DegeneratePlanError : Error {
  using Error::Error;
};

}  // namespace mgdispatch

#pragma once

#include <stdexcept>
#include <string>

namespace nsalpha {

/// Invalid user configuration (bad sizes, mismatched bases, missing files).
/// The CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Out-of-range argument to a pure operation (negative alpha, n > N, ...).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure: eigensolver non-convergence, blow-up. Exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by the time integrator when the state becomes non-finite or exceeds
/// the blow-up threshold.
class BlowUpError : public NumericalError {
 public:
  BlowUpError(const std::string& what, double t, std::string last_checkpoint)
      : NumericalError(what), t_(t), last_checkpoint_(std::move(last_checkpoint)) {}

  double time() const noexcept { return t_; }
  /// Path of the last checkpoint written before the failure; empty if none.
  const std::string& last_checkpoint() const noexcept { return last_checkpoint_; }

 private:
  double t_;
  std::string last_checkpoint_;
};

}  // namespace nsalpha

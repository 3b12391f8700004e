#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mbsf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// One environment interaction (s, a, s', r) in raw state coordinates.
struct Transition {
  Vector state;
  std::size_t action = 0;
  Vector next_state;
  double reward = 0.0;
};

/// Bad dimensions, out-of-range hyperparameters, malformed configs.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input that violates a documented precondition (non-stochastic matrix,
/// state inside a barrier, action on an uncontrollable dial).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An estimator or solver hit a degenerate quantity (innovation variance
/// <= 0, singular innovation covariance).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Linear solve on an (almost) singular system; carries the estimate of the
/// condition number that triggered it.
class SolverError : public NumericalError {
 public:
  SolverError(const std::string& what, double condition)
      : NumericalError(what), condition_(condition) {}
  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

/// Malformed or truncated files (task specs, configs, checkpoints).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Counters for recoverable events. Operations that can degrade gracefully
/// bump these instead of throwing.
struct Diagnostics {
  std::size_t resolvent_shrinkage = 0;
  std::size_t likelihood_underflow = 0;
  std::size_t sgd_skipped = 0;

  Diagnostics& operator+=(const Diagnostics& other) {
    resolvent_shrinkage += other.resolvent_shrinkage;
    likelihood_underflow += other.likelihood_underflow;
    sgd_skipped += other.sgd_skipped;
    return *this;
  }
  bool operator==(const Diagnostics&) const = default;
};

}  // namespace mbsf

#pragma once

#include <stdexcept>
#include <string>

namespace pairgrpo {

// Index errors use std::out_of_range and argument / dimension errors use
// std::invalid_argument. The types below cover the numerical failure modes.

/// KL divergence with a zero reference mass where the first argument has mass.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A loss evaluated to NaN or Inf during finite differencing.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejection sampling exhausted its attempt budget.
class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A Monte-Carlo batch produced a zero gradient where a direction is needed.
class DegenerateBatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite loss or gradient during training.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(int epoch, const std::string& what)
      : std::runtime_error(what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

/// Invalid configuration value; field() names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace pairgrpo

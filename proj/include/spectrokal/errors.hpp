#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spectrokal {

// Invalid parameters, dimension mismatches, unsupported sampling.
class ConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Caller violated an operation precondition (empty input, bad step, ...).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A recursion produced a non-finite value or lost positive definiteness.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, std::size_t step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

// Iterative solver ran out of iterations.
class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(const std::string& what, double last_residual)
      : std::runtime_error(what + " (last residual " + std::to_string(last_residual) + ")"),
        last_residual_(last_residual) {}

  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

// Segmentation needs at least three R peaks.
class TooFewPeaksError : public std::runtime_error {
 public:
  TooFewPeaksError(const std::string& what, std::size_t found)
      : std::runtime_error(what), found_(found) {}

  std::size_t found() const noexcept { return found_; }

 private:
  std::size_t found_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spectrokal

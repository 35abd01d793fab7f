#pragma once

#include <stdexcept>
#include <string>

namespace dmoc {

/// Caller violated a precondition (mismatched groups, wrong lengths, bad index range).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A map was evaluated outside its domain (log at the cut locus, dexpinv outside
/// its convergence disc).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The implicit one-step solve of the integrator failed.
class StepFailure : public std::runtime_error {
 public:
  StepFailure(const std::string& what, int step, double residual)
      : std::runtime_error(what), step_(step), residual_(residual) {}

  int step() const { return step_; }
  double residual() const { return residual_; }

 private:
  int step_;
  double residual_;
};

}  // namespace dmoc

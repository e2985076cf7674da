#pragma once

#include <stdexcept>
#include <string>

namespace ethlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition (shape, range, Hermiticity...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A numerical kernel failed (eigensolver non-convergence and the like).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A microcanonical window selected no eigenstates.
class EmptyWindowError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Argument outside the domain of a closed-form expression.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The static-fluctuation integral diverges (pi/lambda <= beta/2).
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double saturation_rate)
      : Error(what), saturation_rate_(saturation_rate) {}
  /// The chaos-bound value 2*pi/beta at which the integral first diverges.
  double saturation_rate() const noexcept { return saturation_rate_; }

 private:
  double saturation_rate_;
};

/// Request refused because its estimated cost exceeds the configured guard.
class CostGuardError : public Error {
 public:
  CostGuardError(const std::string& what, double estimated_flops)
      : Error(what), estimated_flops_(estimated_flops) {}
  double estimated_flops() const noexcept { return estimated_flops_; }

 private:
  double estimated_flops_;
};

enum class FitRejection { nonpositive_gap, non_growing, hierarchy };

/// fit_lyapunov could not produce an acceptable fit.
class FitRejectedError : public Error {
 public:
  FitRejectedError(const std::string& what, FitRejection reason, double rate)
      : Error(what), reason_(reason), rate_(rate) {}
  FitRejection reason() const noexcept { return reason_; }
  /// Fitted slope at the time of rejection (NaN if no regression was run).
  double rate() const noexcept { return rate_; }

 private:
  FitRejection reason_;
  double rate_;
};

}  // namespace ethlab

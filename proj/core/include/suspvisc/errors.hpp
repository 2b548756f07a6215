#pragma once

#include <stdexcept>
#include <string>

namespace suspvisc {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition (out-of-range parameter,
/// malformed field, mismatched metadata).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Random placement exhausted its dart budget.
class SaturationError : public Error {
 public:
  SaturationError(const std::string& what, long placed, long target)
      : Error(what), placed_(placed), target_(target) {}
  long placed() const noexcept { return placed_; }
  long target() const noexcept { return target_; }

 private:
  long placed_;
  long target_;
};

/// Iterative solve stopped at max iterations above tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_residual, int iterations)
      : Error(what), last_residual_(last_residual), iterations_(iterations) {}
  double last_residual() const noexcept { return last_residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double last_residual_;
  int iterations_;
};

/// Too many samples of a campaign failed.
class CampaignError : public Error {
 public:
  using Error::Error;
};

/// The pair correlation does not decay, so the renormalized second-order
/// formula is not absolutely convergent.
class RenormalizationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace suspvisc

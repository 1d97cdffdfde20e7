#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rvol {

enum class ErrorKind {
  NonPositiveDefinite,
  DerivativeOrderUnavailable,
  DimensionTooSmall,
  KOutOfRange,
  GridResolutionInsufficient,
  NotEinstein,
  TruncationTooShort,
  ExpressionMismatch,
  DimensionFour,
  GeneralFGUnavailable,
  InvalidRange,
  HalfDimension,
  NotCritical,
  OddDimension,
  EpsilonOutOfRange,
  IllConditionedFit,
  EvenDimension,
  NotTotallyGeodesic,
  CoefficientUnavailable,
  WrongDimension,
  StepRejected,
  NoConvergence,
  UnknownCommand,
  ConfigInvalid,
};

std::string_view to_string(ErrorKind kind);

// Numerical failures map to CLI exit code 2, everything else is a
// validation/precondition failure (exit code 1).
bool is_numerical_failure(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace rvol

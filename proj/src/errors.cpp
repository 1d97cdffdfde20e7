#include "rvol/errors.hpp"

namespace rvol {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonPositiveDefinite: return "NonPositiveDefinite";
    case ErrorKind::DerivativeOrderUnavailable: return "DerivativeOrderUnavailable";
    case ErrorKind::DimensionTooSmall: return "DimensionTooSmall";
    case ErrorKind::KOutOfRange: return "KOutOfRange";
    case ErrorKind::GridResolutionInsufficient: return "GridResolutionInsufficient";
    case ErrorKind::NotEinstein: return "NotEinstein";
    case ErrorKind::TruncationTooShort: return "TruncationTooShort";
    case ErrorKind::ExpressionMismatch: return "ExpressionMismatch";
    case ErrorKind::DimensionFour: return "DimensionFour";
    case ErrorKind::GeneralFGUnavailable: return "GeneralFGUnavailable";
    case ErrorKind::InvalidRange: return "InvalidRange";
    case ErrorKind::HalfDimension: return "HalfDimension";
    case ErrorKind::NotCritical: return "NotCritical";
    case ErrorKind::OddDimension: return "OddDimension";
    case ErrorKind::EpsilonOutOfRange: return "EpsilonOutOfRange";
    case ErrorKind::IllConditionedFit: return "IllConditionedFit";
    case ErrorKind::EvenDimension: return "EvenDimension";
    case ErrorKind::NotTotallyGeodesic: return "NotTotallyGeodesic";
    case ErrorKind::CoefficientUnavailable: return "CoefficientUnavailable";
    case ErrorKind::WrongDimension: return "WrongDimension";
    case ErrorKind::StepRejected: return "StepRejected";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::UnknownCommand: return "UnknownCommand";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

bool is_numerical_failure(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonPositiveDefinite:
    case ErrorKind::GridResolutionInsufficient:
    case ErrorKind::ExpressionMismatch:
    case ErrorKind::NotCritical:
    case ErrorKind::IllConditionedFit:
    case ErrorKind::StepRejected:
    case ErrorKind::NoConvergence:
    case ErrorKind::NotEinstein:
      return true;
    default:
      return false;
  }
}

}  // namespace rvol

#include "dephase/error.hpp"

namespace dephase {

std::string_view error_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NonConfining: return "NonConfining";
    case ErrorKind::Unstable: return "Unstable";
    case ErrorKind::NegativeFrequency: return "NegativeFrequency";
    case ErrorKind::NyquistViolation: return "NyquistViolation";
    case ErrorKind::SegmentTooLong: return "SegmentTooLong";
    case ErrorKind::OrderingViolation: return "OrderingViolation";
    case ErrorKind::OverlapViolation: return "OverlapViolation";
    case ErrorKind::NonConvergent: return "NonConvergent";
    case ErrorKind::DivergentIntegrand: return "DivergentIntegrand";
    case ErrorKind::NoCrossing: return "NoCrossing";
    case ErrorKind::UnderResolvedPulse: return "UnderResolvedPulse";
    case ErrorKind::FitFailure: return "FitFailure";
    case ErrorKind::PoorFit: return "PoorFit";
    case ErrorKind::Degenerate: return "Degenerate";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::InfeasibleStart: return "InfeasibleStart";
  }
  return "Unknown";
}

bool is_validation_error(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::NegativeFrequency:
    case ErrorKind::OrderingViolation:
    case ErrorKind::SegmentTooLong:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(error_name(kind)) + ": " + message),
      kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace dephase

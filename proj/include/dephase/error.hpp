#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dephase {

enum class ErrorKind {
  InvalidArgument,
  NonConfining,
  Unstable,
  NegativeFrequency,
  NyquistViolation,
  SegmentTooLong,
  OrderingViolation,
  OverlapViolation,
  NonConvergent,
  DivergentIntegrand,
  NoCrossing,
  UnderResolvedPulse,
  FitFailure,
  PoorFit,
  Degenerate,
  NonConvergence,
  InfeasibleStart,
};

std::string_view error_name(ErrorKind kind) noexcept;

// Validation errors reject inputs before any computation runs; the rest are
// raised by the computation itself.
bool is_validation_error(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return error_name(kind_); }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorKind::InvalidArgument, message);
}

}  // namespace dephase

#pragma once

#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lattes_forge {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kEps = std::numeric_limits<double>::epsilon();
inline constexpr double kDefaultTol = 1e-10;

enum class ErrorCode {
  InvalidArgument,
  ParseError,
  PoleAtLatticePoint,
  NonConvergent,
  LemmaViolation,
  IllConditioned,
  ValidationFailed,
  IndeterminatePoint,
  RootCountMismatch,
  NoConvergence,
  ContinuationBreakdown,
  BranchAmbiguity,
  NoCycleDetected,
  CoprimalityViolation,
  PostcriticalCollision,
  PrecisionExhausted,
  NotPCF,
  NotRepelling,
};

std::string_view to_string(ErrorCode code) noexcept;

// Single exception type for the library; callers dispatch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorCode::InvalidArgument, message);
}

}  // namespace lattes_forge

#include "lattes_forge/core.hpp"

namespace lattes_forge {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::PoleAtLatticePoint: return "PoleAtLatticePoint";
    case ErrorCode::NonConvergent: return "NonConvergent";
    case ErrorCode::LemmaViolation: return "LemmaViolation";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::ValidationFailed: return "ValidationFailed";
    case ErrorCode::IndeterminatePoint: return "IndeterminatePoint";
    case ErrorCode::RootCountMismatch: return "RootCountMismatch";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::ContinuationBreakdown: return "ContinuationBreakdown";
    case ErrorCode::BranchAmbiguity: return "BranchAmbiguity";
    case ErrorCode::NoCycleDetected: return "NoCycleDetected";
    case ErrorCode::CoprimalityViolation: return "CoprimalityViolation";
    case ErrorCode::PostcriticalCollision: return "PostcriticalCollision";
    case ErrorCode::PrecisionExhausted: return "PrecisionExhausted";
    case ErrorCode::NotPCF: return "NotPCF";
    case ErrorCode::NotRepelling: return "NotRepelling";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace lattes_forge

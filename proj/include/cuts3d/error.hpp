#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cuts3d {

enum class ErrorCode {
  MalformedHeader,
  UnsupportedDtype,
  TruncatedPayload,
  IoFailure,
  CountsOverflow,
  ZeroVectorPatch,
  ConvergenceFailure,
  DegenerateSplit,
  SeedConflict,
  EmptyMask,
  DegenerateScale,
  ShapeMismatch,
  InvalidArgument,
  ManifestMissing,
  OverlapInfeasible,
  TooLarge,
  IdMismatch,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::CountsOverflow: return "CountsOverflow";
    case ErrorCode::ZeroVectorPatch: return "ZeroVectorPatch";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::DegenerateSplit: return "DegenerateSplit";
    case ErrorCode::SeedConflict: return "SeedConflict";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::DegenerateScale: return "DegenerateScale";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ManifestMissing: return "ManifestMissing";
    case ErrorCode::OverlapInfeasible: return "OverlapInfeasible";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::IdMismatch: return "IdMismatch";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so that
/// callers (the batch runner in particular) can branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace cuts3d

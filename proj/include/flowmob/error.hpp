#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace flowmob {

enum class ErrorCode {
  InvalidArgument,
  EmptyPrefixList,
  MixedPrefixLengths,
  LengthMismatch,
  UnsupportedCase,
  UnstableQueue,
  DegenerateDensity,
  Divergent,
  InvalidConfig,
  IoFailure,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyPrefixList: return "EmptyPrefixList";
    case ErrorCode::MixedPrefixLengths: return "MixedPrefixLengths";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::UnsupportedCase: return "UnsupportedCase";
    case ErrorCode::UnstableQueue: return "UnstableQueue";
    case ErrorCode::DegenerateDensity: return "DegenerateDensity";
    case ErrorCode::Divergent: return "Divergent";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

/// All library failures are reported through this exception; `code()` lets
/// callers (the CLI in particular) map failures onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace flowmob

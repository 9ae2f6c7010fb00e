#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace iat {

enum class ErrorCode {
  GridMismatch,
  EmptyRegion,
  DegenerateDensity,
  DegeneratePenalty,
  FamilyNotNested,
  EmptyFamily,
  SingularPoint,
  TruncationRequired,
  TruncationTooSmall,
  DomainExceeded,
  SupportViolation,
  DomainError,
  ParseError,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::DegenerateDensity: return "DegenerateDensity";
    case ErrorCode::DegeneratePenalty: return "DegeneratePenalty";
    case ErrorCode::FamilyNotNested: return "FamilyNotNested";
    case ErrorCode::EmptyFamily: return "EmptyFamily";
    case ErrorCode::SingularPoint: return "SingularPoint";
    case ErrorCode::TruncationRequired: return "TruncationRequired";
    case ErrorCode::TruncationTooSmall: return "TruncationTooSmall";
    case ErrorCode::DomainExceeded: return "DomainExceeded";
    case ErrorCode::SupportViolation: return "SupportViolation";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library. `module()` names the subsystem that
/// raised it so front ends can report codes like "levels.DegenerateDensity".
class Error : public std::runtime_error {
 public:
  Error(std::string_view module, ErrorCode code, const std::string& what)
      : std::runtime_error(what), module_(module), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& module() const noexcept { return module_; }
  std::string qualified_code() const {
    return module_ + "." + std::string(to_string(code_));
  }

 private:
  std::string module_;
  ErrorCode code_;
};

}  // namespace iat

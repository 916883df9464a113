#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dsg {

enum class ErrorCode {
  DimensionMismatch,
  ImproperValue,
  InvalidArgument,
  InvalidExponent,
  DegenerateSigma,
  GridTooLarge,
  CertificationUnavailable,
  DegenerateZ,
  ScheduleViolation,
  NonmonotoneDualCertified,
  InvalidDualSolution,
  UnknownProblem,
  ConfigError,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ImproperValue: return "ImproperValue";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidExponent: return "InvalidExponent";
    case ErrorCode::DegenerateSigma: return "DegenerateSigma";
    case ErrorCode::GridTooLarge: return "GridTooLarge";
    case ErrorCode::CertificationUnavailable: return "CertificationUnavailable";
    case ErrorCode::DegenerateZ: return "DegenerateZ";
    case ErrorCode::ScheduleViolation: return "ScheduleViolation";
    case ErrorCode::NonmonotoneDualCertified: return "NonmonotoneDualCertified";
    case ErrorCode::InvalidDualSolution: return "InvalidDualSolution";
    case ErrorCode::UnknownProblem: return "UnknownProblem";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Single exception type for the library; `code()` tells callers what went wrong.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// The text without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace dsg

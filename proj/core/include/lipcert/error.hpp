#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lipcert {

enum class ErrorCode {
  kGrammarViolation,
  kDimensionMismatch,
  kInvalidValue,
  kIndivisiblePooling,
  kFlattenMismatch,
  kMaxPoolUnsupported,
  kBracketInvalid,
  kSolverFailure,
  kAuditFailure,
  kParseError,
};

/// Stable identifier used in reports and CLI messages, e.g. "GrammarViolation".
std::string_view error_code_name(ErrorCode code);

/// All recoverable failures in the library are reported through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lipcert

#include "lipcert/error.hpp"

namespace lipcert {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kGrammarViolation: return "GrammarViolation";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInvalidValue: return "InvalidValue";
    case ErrorCode::kIndivisiblePooling: return "IndivisiblePooling";
    case ErrorCode::kFlattenMismatch: return "FlattenMismatch";
    case ErrorCode::kMaxPoolUnsupported: return "MaxPoolUnsupported";
    case ErrorCode::kBracketInvalid: return "BracketInvalid";
    case ErrorCode::kSolverFailure: return "SolverFailure";
    case ErrorCode::kAuditFailure: return "AuditFailure";
    case ErrorCode::kParseError: return "ParseError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
      code_(code) {}

}  // namespace lipcert

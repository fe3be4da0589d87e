#include "t2iattack/error.hpp"

namespace t2ia {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kNoEligibleCharacter: return "NoEligibleCharacter";
    case ErrorCode::kNoApplicableRule: return "NoApplicableRule";
    case ErrorCode::kNotAWord: return "NotAWord";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kEmptyBatch: return "EmptyBatch";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kConfiguration: return "Configuration";
    case ErrorCode::kPrecondition: return "Precondition";
    case ErrorCode::kOracleUnavailable: return "OracleUnavailable";
    case ErrorCode::kProtocol: return "Protocol";
    case ErrorCode::kAllSamplesExcluded: return "AllSamplesExcluded";
    case ErrorCode::kUndefinedSlope: return "UndefinedSlope";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

OracleUnavailable::OracleUnavailable(const std::string& message, int attempts)
    : Error(ErrorCode::kOracleUnavailable,
            message + " (after " + std::to_string(attempts) + " attempts)"),
      attempts_(attempts) {}

}  // namespace t2ia

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace t2ia {

enum class ErrorCode {
  kEmptyInput,
  kNoEligibleCharacter,
  kNoApplicableRule,
  kNotAWord,
  kZeroVector,
  kDimensionMismatch,
  kEmptyBatch,
  kEmptyCorpus,
  kConfiguration,
  kPrecondition,
  kOracleUnavailable,
  kProtocol,
  kAllSamplesExcluded,
  kUndefinedSlope,
  kIo,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a stable code so that
/// frontends can map it onto exit statuses without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the remote oracle once the retry cap is exhausted.
class OracleUnavailable : public Error {
 public:
  OracleUnavailable(const std::string& message, int attempts);

  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

}  // namespace t2ia

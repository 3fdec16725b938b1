// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace structex {

enum class ErrorCode {
  kInvalidInput,
  kIo,
  kConfig,
  kMissingPrice,
  kBadThresholds,
  kUnknownSector,
  kInsufficientHistory,
  kBackendError,
  kMissingSlot,
  kRemoteError,
  kScriptMiss,
  kParseError,
  kLengthMismatch,
  kReferenceZero,
  kBadDistribution,
  kTraceError,
};

std::string_view to_string(ErrorCode code);

// Base exception for every failure the library reports. The code lets callers
// branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace structex

// SPDX-License-Identifier: Apache-2.0
#include "structex/error.hpp"

#include <fmt/format.h>

namespace structex {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return "InvalidInput";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kConfig: return "Config";
    case ErrorCode::kMissingPrice: return "MissingPrice";
    case ErrorCode::kBadThresholds: return "BadThresholds";
    case ErrorCode::kUnknownSector: return "UnknownSector";
    case ErrorCode::kInsufficientHistory: return "InsufficientHistory";
    case ErrorCode::kBackendError: return "BackendError";
    case ErrorCode::kMissingSlot: return "MissingSlot";
    case ErrorCode::kRemoteError: return "RemoteError";
    case ErrorCode::kScriptMiss: return "ScriptMiss";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kReferenceZero: return "ReferenceZero";
    case ErrorCode::kBadDistribution: return "BadDistribution";
    case ErrorCode::kTraceError: return "TraceError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(fmt::format("{}: {}", to_string(code), message)),
      code_(code) {}

}  // namespace structex

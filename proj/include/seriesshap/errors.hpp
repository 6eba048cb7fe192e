// Copyright 2026 The seriesshap Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace seriesshap {

enum class ErrorCode {
  kParse,
  kUnknownField,
  kUnknownTag,
  kWidthMismatch,
  kIndexOutOfRange,
  kNonFinite,
  kInvalidModel,
  kArityGuard,
  kActiveFeatureGuard,
  kEmptyBaselineSet,
  kDomain,
  kMissingLabel,
  kEfficiency,
  kInvalidPartition,
  kInvalidGroup,
  kShapeMismatch,
  kOutOfRange,
  kMismatchedReports,
  kBaselineMismatch,
  kVersion,
  kMalformedFrame,
  kUnknownSample,
  kUnreachable,
  kRejectedResponse,
  kIo,
  kInvalidArgument,
};

inline std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (and the CLI) can tell guard violations from bad input.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // Message without the code prefix, for re-wrapping with more context.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kUnknownField: return "unknown field";
    case ErrorCode::kUnknownTag: return "unknown tag";
    case ErrorCode::kWidthMismatch: return "width mismatch";
    case ErrorCode::kIndexOutOfRange: return "index out of range";
    case ErrorCode::kNonFinite: return "non-finite value";
    case ErrorCode::kInvalidModel: return "invalid model";
    case ErrorCode::kArityGuard: return "arity guard exceeded";
    case ErrorCode::kActiveFeatureGuard: return "active-feature guard exceeded";
    case ErrorCode::kEmptyBaselineSet: return "empty baseline set";
    case ErrorCode::kDomain: return "domain error";
    case ErrorCode::kMissingLabel: return "missing label";
    case ErrorCode::kEfficiency: return "efficiency check failed";
    case ErrorCode::kInvalidPartition: return "invalid partition";
    case ErrorCode::kInvalidGroup: return "invalid group spec";
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kOutOfRange: return "out of range";
    case ErrorCode::kMismatchedReports: return "mismatched reports";
    case ErrorCode::kBaselineMismatch: return "baseline-set mismatch";
    case ErrorCode::kVersion: return "protocol version mismatch";
    case ErrorCode::kMalformedFrame: return "malformed frame";
    case ErrorCode::kUnknownSample: return "unknown sample id";
    case ErrorCode::kUnreachable: return "node unreachable";
    case ErrorCode::kRejectedResponse: return "rejected response";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kInvalidArgument: return "invalid argument";
  }
  return "error";
}

}  // namespace seriesshap

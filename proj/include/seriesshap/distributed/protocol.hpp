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

#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "seriesshap/errors.hpp"

namespace seriesshap::distributed {

inline constexpr int kProtocolVersion = 1;

/// Coordinator -> node: the attribution that the meta-model assigns to one
/// score feature for one (explicand, baseline) pair. Carries identifiers and
/// a single scalar only.
struct ScoreAttributionRequest {
  int version = kProtocolVersion;
  std::string baseline_set;
  std::string explicand;
  std::string baseline;
  std::string score;
  double value = 0.0;

  bool operator==(const ScoreAttributionRequest&) const = default;
};

/// Node -> coordinator: the request's value spread over the node's raw
/// features, plus the node's own score delta for auditing.
struct ScoreAttributionResponse {
  int version = kProtocolVersion;
  std::string baseline_set;
  std::string explicand;
  std::string baseline;
  std::string score;
  std::vector<std::pair<std::string, double>> attrs;
  double score_delta = 0.0;

  bool operator==(const ScoreAttributionResponse&) const = default;
};

struct ErrorReply {
  int version = kProtocolVersion;
  std::string baseline_set;
  std::string explicand;
  std::string baseline;
  std::string score;
  std::string code;
  std::string message;

  bool operator==(const ErrorReply&) const = default;
};

using Message = std::variant<ScoreAttributionRequest, ScoreAttributionResponse, ErrorReply>;

/// One JSON object, canonical field order, 17 significant digits, no
/// trailing newline.
std::string encode_message(const Message& msg);

/// Throws kVersion for v != 1 and kMalformedFrame for anything else that does
/// not match the schema exactly.
Message decode_message(std::string_view frame);

std::string wire_code(ErrorCode code);
ErrorCode code_from_wire(std::string_view code);

/// Field names the schema defines; frames may contain nothing else.
const std::vector<std::string>& allowed_wire_fields();

}  // namespace seriesshap::distributed

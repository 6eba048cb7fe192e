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

#include "seriesshap/distributed/protocol.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "seriesshap/format.hpp"

namespace seriesshap::distributed {

using json = nlohmann::ordered_json;

namespace {

std::string quote(const std::string& s) {
  try {
    return json(s).dump();
  } catch (const json::type_error&) {
    fail(ErrorCode::kMalformedFrame, "field text is not valid UTF-8");
  }
}

std::string number(double v) {
  if (!std::isfinite(v)) fail(ErrorCode::kMalformedFrame, "non-finite value cannot be encoded");
  return format_double(v);
}

template <typename M>
std::string header(const M& m, const char* type) {
  if (m.score.empty() && std::string_view(type) != "err") fail(ErrorCode::kMalformedFrame, "missing score name");
  return "{\"v\":" + std::to_string(m.version) + ",\"type\":\"" + type + "\",\"baseline_set\":" +
         quote(m.baseline_set) + ",\"explicand\":" + quote(m.explicand) + ",\"baseline\":" + quote(m.baseline) +
         ",\"score\":" + quote(m.score);
}

const json& field(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) fail(ErrorCode::kMalformedFrame, std::string("missing field '") + key + "'");
  return *it;
}

std::string string_field(const json& doc, const char* key) {
  const json& v = field(doc, key);
  if (!v.is_string()) fail(ErrorCode::kMalformedFrame, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

double number_field(const json& v, const std::string& key) {
  if (!v.is_number()) fail(ErrorCode::kMalformedFrame, "field '" + key + "' must be a number");
  return v.get<double>();
}

void exact_fields(const json& doc, std::initializer_list<const char*> keys) {
  for (const auto& [k, _] : doc.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
      fail(ErrorCode::kMalformedFrame, "unexpected field '" + k + "'");
    }
  }
}

template <typename M>
void read_ids(const json& doc, M& m, bool need_score = true) {
  m.baseline_set = string_field(doc, "baseline_set");
  m.explicand = string_field(doc, "explicand");
  m.baseline = string_field(doc, "baseline");
  m.score = string_field(doc, "score");
  if (need_score && m.score.empty()) fail(ErrorCode::kMalformedFrame, "empty score name");
}

}  // namespace

std::string encode_message(const Message& msg) {
  return std::visit(
      [](const auto& m) -> std::string {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ScoreAttributionRequest>) {
          return header(m, "req") + ",\"value\":" + number(m.value) + "}";
        } else if constexpr (std::is_same_v<T, ScoreAttributionResponse>) {
          std::string attrs = "{";
          for (std::size_t i = 0; i < m.attrs.size(); ++i) {
            if (i) attrs += ",";
            attrs += quote(m.attrs[i].first) + ":" + number(m.attrs[i].second);
          }
          attrs += "}";
          return header(m, "resp") + ",\"attrs\":" + attrs + ",\"score_delta\":" + number(m.score_delta) + "}";
        } else {
          return header(m, "err") + ",\"code\":" + quote(m.code) + ",\"message\":" + quote(m.message) + "}";
        }
      },
      msg);
}

Message decode_message(std::string_view frame) {
  json doc;
  try {
    doc = json::parse(frame);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kMalformedFrame, e.what());
  }
  if (!doc.is_object()) fail(ErrorCode::kMalformedFrame, "frame is not a JSON object");
  const json& v = field(doc, "v");
  if (!v.is_number_integer() || v.get<long long>() != kProtocolVersion) {
    fail(ErrorCode::kVersion, "got " + v.dump() + ", speaking " + std::to_string(kProtocolVersion));
  }
  const std::string type = string_field(doc, "type");
  if (type == "req") {
    exact_fields(doc, {"v", "type", "baseline_set", "explicand", "baseline", "score", "value"});
    ScoreAttributionRequest r;
    read_ids(doc, r);
    r.value = number_field(field(doc, "value"), "value");
    return r;
  }
  if (type == "resp") {
    exact_fields(doc, {"v", "type", "baseline_set", "explicand", "baseline", "score", "attrs", "score_delta"});
    ScoreAttributionResponse r;
    read_ids(doc, r);
    const json& attrs = field(doc, "attrs");
    if (!attrs.is_object()) fail(ErrorCode::kMalformedFrame, "'attrs' must be an object");
    for (const auto& [name, value] : attrs.items()) r.attrs.emplace_back(name, number_field(value, "attrs." + name));
    r.score_delta = number_field(field(doc, "score_delta"), "score_delta");
    return r;
  }
  if (type == "err") {
    exact_fields(doc, {"v", "type", "baseline_set", "explicand", "baseline", "score", "code", "message"});
    ErrorReply r;
    read_ids(doc, r, false);
    r.code = string_field(doc, "code");
    r.message = string_field(doc, "message");
    return r;
  }
  fail(ErrorCode::kMalformedFrame, "unknown frame type '" + type + "'");
}

std::string wire_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBaselineMismatch: return "baseline_mismatch";
    case ErrorCode::kUnknownSample: return "unknown_sample";
    case ErrorCode::kVersion: return "version";
    case ErrorCode::kMalformedFrame: return "malformed_frame";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    default: return "internal";
  }
}

ErrorCode code_from_wire(std::string_view code) {
  if (code == "baseline_mismatch") return ErrorCode::kBaselineMismatch;
  if (code == "unknown_sample") return ErrorCode::kUnknownSample;
  if (code == "version") return ErrorCode::kVersion;
  if (code == "malformed_frame") return ErrorCode::kMalformedFrame;
  if (code == "invalid_argument") return ErrorCode::kInvalidArgument;
  return ErrorCode::kRejectedResponse;
}

const std::vector<std::string>& allowed_wire_fields() {
  static const std::vector<std::string> fields{"v",     "type",  "baseline_set", "explicand", "baseline", "score",
                                               "value", "attrs", "score_delta",  "code",      "message"};
  return fields;
}

}  // namespace seriesshap::distributed

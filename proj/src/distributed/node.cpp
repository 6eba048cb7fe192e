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

#include "seriesshap/distributed/node.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "seriesshap/baseline_set.hpp"
#include "seriesshap/chain_engine.hpp"

namespace seriesshap::distributed {

using json = nlohmann::ordered_json;

namespace {

std::vector<std::string> string_list(const json& v, const std::string& where) {
  if (!v.is_array()) fail(ErrorCode::kParse, where + " must be a list of names");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) fail(ErrorCode::kParse, where + " must be a list of names");
    out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace

std::vector<NodeDescriptor> load_registry(const json& doc) {
  if (!doc.is_array()) fail(ErrorCode::kParse, "registry must be a JSON list of node descriptors");
  std::vector<NodeDescriptor> out;
  std::set<std::string> ids, scores, features;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string where = "registry[" + std::to_string(i) + "]";
    const json& n = doc[i];
    if (!n.is_object()) fail(ErrorCode::kParse, where + " is not an object");
    for (const auto& [k, _] : n.items()) {
      if (k != "id" && k != "scores" && k != "features" && k != "endpoint") {
        fail(ErrorCode::kUnknownField, where + "." + k);
      }
    }
    if (!n.contains("id") || !n["id"].is_string()) fail(ErrorCode::kParse, where + ".id missing");
    NodeDescriptor d;
    d.id = n["id"].get<std::string>();
    d.scores = string_list(n.value("scores", json::array()), where + ".scores");
    d.features = string_list(n.value("features", json::array()), where + ".features");
    if (n.contains("endpoint")) {
      if (!n["endpoint"].is_string()) fail(ErrorCode::kParse, where + ".endpoint must be a string");
      d.endpoint = n["endpoint"].get<std::string>();
    }
    if (!ids.insert(d.id).second) fail(ErrorCode::kInvalidArgument, "duplicate node id '" + d.id + "'");
    for (const auto& s : d.scores) {
      if (!scores.insert(s).second) fail(ErrorCode::kInvalidArgument, "score '" + s + "' owned by two nodes");
    }
    for (const auto& f : d.features) {
      if (!features.insert(f).second) fail(ErrorCode::kInvalidArgument, "feature '" + f + "' advertised twice");
    }
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<NodeDescriptor> load_registry_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return load_registry(json::parse(ss.str()));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kParse, path + ": " + e.what());
  } catch (const Error& e) {
    fail(e.code(), path + ": " + e.detail());
  }
}

json to_json(const std::vector<NodeDescriptor>& registry) {
  json out = json::array();
  for (const auto& d : registry) {
    json n;
    n["id"] = d.id;
    n["scores"] = d.scores;
    n["features"] = d.features;
    n["endpoint"] = d.endpoint;
    out.push_back(std::move(n));
  }
  return out;
}

NodeService::NodeService(std::string node_id, std::map<std::string, Pipeline> scores, Dataset columns,
                         const std::vector<std::vector<std::string>>& baseline_sets)
    : id_(std::move(node_id)), columns_(std::move(columns)) {
  if (scores.empty()) fail(ErrorCode::kInvalidArgument, "node '" + id_ + "' serves no score");
  for (auto& [name, model] : scores) {
    if (model.output_width() != 1) {
      fail(ErrorCode::kInvalidModel, "score '" + name + "' must have a single output");
    }
    std::vector<Index> cols;
    if (model.feature_names().empty()) {
      if (model.input_width() != columns_.cols()) {
        fail(ErrorCode::kWidthMismatch, "score '" + name + "' reads " + std::to_string(model.input_width()) +
                                            " inputs, node holds " + std::to_string(columns_.cols()) + " columns");
      }
      for (Index j = 0; j < columns_.cols(); ++j) cols.push_back(j);
    } else {
      for (const auto& f : model.feature_names()) cols.push_back(columns_.column_index(f));
    }
    scores_.emplace(name, Score{std::move(model), std::move(cols)});
  }
  for (const auto& ids : baseline_sets) {
    if (ids.empty()) fail(ErrorCode::kEmptyBaselineSet, "node '" + id_ + "'");
    for (const auto& s : ids) {
      if (!columns_.has_id(s)) fail(ErrorCode::kUnknownSample, "baseline '" + s + "' not held by node '" + id_ + "'");
    }
    baseline_sets_.emplace(id_set_hash(ids), ids);
  }
}

NodeDescriptor NodeService::descriptor(std::string endpoint) const {
  NodeDescriptor d;
  d.id = id_;
  d.endpoint = std::move(endpoint);
  std::set<std::string> seen;
  for (const auto& [name, score] : scores_) {
    d.scores.push_back(name);
    for (Index c : score.columns) {
      if (seen.insert(columns_.columns()[c]).second) d.features.push_back(columns_.columns()[c]);
    }
  }
  return d;
}

ScoreAttributionResponse NodeService::answer(const ScoreAttributionRequest& req) const {
  auto set = baseline_sets_.find(req.baseline_set);
  if (set == baseline_sets_.end()) {
    fail(ErrorCode::kBaselineMismatch, "node '" + id_ + "' does not hold baseline set " + req.baseline_set);
  }
  if (std::find(set->second.begin(), set->second.end(), req.baseline) == set->second.end()) {
    fail(ErrorCode::kBaselineMismatch, "sample '" + req.baseline + "' is not in baseline set " + req.baseline_set);
  }
  auto it = scores_.find(req.score);
  if (it == scores_.end()) fail(ErrorCode::kInvalidArgument, "node '" + id_ + "' does not own score '" + req.score + "'");
  const Score& score = it->second;

  const Vector row_e = columns_.row(columns_.row_index(req.explicand));
  const Vector row_b = columns_.row(columns_.row_index(req.baseline));
  Vector xe(score.columns.size()), xb(score.columns.size());
  for (std::size_t i = 0; i < score.columns.size(); ++i) {
    xe(i) = row_e(score.columns[i]);
    xb(i) = row_b(score.columns[i]);
  }
  const ChainTrace trace = chain_single_baseline(score.model, xe, xb);
  const Vector scale = hadamard_div(Vector::Constant(1, req.value), Vector::Constant(1, trace.final_delta));
  const Vector attrs = trace.attributions() * scale(0);

  ScoreAttributionResponse resp;
  resp.baseline_set = req.baseline_set;
  resp.explicand = req.explicand;
  resp.baseline = req.baseline;
  resp.score = req.score;
  resp.score_delta = trace.final_delta;
  for (std::size_t i = 0; i < score.columns.size(); ++i) {
    resp.attrs.emplace_back(columns_.columns()[score.columns[i]], attrs(static_cast<Index>(i)));
  }
  return resp;
}

Message NodeService::handle(const ScoreAttributionRequest& req) const {
  try {
    return answer(req);
  } catch (const Error& e) {
    return ErrorReply{kProtocolVersion, req.baseline_set, req.explicand, req.baseline, req.score,
                      wire_code(e.code()), e.detail()};
  }
}

std::string NodeService::handle_frame(std::string_view frame) const {
  Message msg;
  try {
    msg = decode_message(frame);
  } catch (const Error& e) {
    ErrorReply err;
    err.code = wire_code(e.code());
    err.message = e.detail();
    return encode_message(err);
  }
  if (const auto* req = std::get_if<ScoreAttributionRequest>(&msg)) return encode_message(handle(*req));
  ErrorReply err;
  err.code = wire_code(ErrorCode::kMalformedFrame);
  err.message = "node accepts requests only";
  return encode_message(err);
}

}  // namespace seriesshap::distributed

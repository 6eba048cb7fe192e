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

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "seriesshap/dataset.hpp"
#include "seriesshap/distributed/protocol.hpp"
#include "seriesshap/model_ir.hpp"

namespace seriesshap::distributed {

struct NodeDescriptor {
  std::string id;
  std::vector<std::string> scores;
  std::vector<std::string> features;
  std::string endpoint;  // host:port; empty for in-process nodes

  bool operator==(const NodeDescriptor&) const = default;
};

/// Registry file: a JSON list of {"id", "scores", "features", "endpoint"}.
/// Rejects duplicated node ids, score names owned twice and features
/// advertised by two nodes.
std::vector<NodeDescriptor> load_registry(const nlohmann::ordered_json& doc);
std::vector<NodeDescriptor> load_registry_file(const std::string& path);
nlohmann::ordered_json to_json(const std::vector<NodeDescriptor>& registry);

/// One institution: private score models over its own columns. Only the
/// columns named by each model's inputs are read.
class NodeService {
 public:
  /// `scores` maps score name to a single-output pipeline whose feature names
  /// are columns of `columns`. `baseline_sets` lists the sample-id lists the
  /// node agreed to; each must be fully present in `columns`.
  NodeService(std::string node_id, std::map<std::string, Pipeline> scores, Dataset columns,
              const std::vector<std::vector<std::string>>& baseline_sets);

  const std::string& id() const { return id_; }
  NodeDescriptor descriptor(std::string endpoint = {}) const;
  bool accepts(const std::string& baseline_set_id) const { return baseline_sets_.count(baseline_set_id) != 0; }

  /// Response or ErrorReply. Deterministic and stateless.
  Message handle(const ScoreAttributionRequest& req) const;
  /// Frame in, frame out. Undecodable input yields an err frame.
  std::string handle_frame(std::string_view frame) const;

 private:
  struct Score {
    Pipeline model;
    std::vector<Index> columns;  // model input i reads this column
  };

  ScoreAttributionResponse answer(const ScoreAttributionRequest& req) const;

  std::string id_;
  std::map<std::string, Score> scores_;
  Dataset columns_;
  std::map<std::string, std::vector<std::string>> baseline_sets_;
};

}  // namespace seriesshap::distributed

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
#include <optional>
#include <string>
#include <vector>

#include "seriesshap/chain_engine.hpp"
#include "seriesshap/dataset.hpp"
#include "seriesshap/distributed/node.hpp"
#include "seriesshap/distributed/transport.hpp"

namespace seriesshap::distributed {

inline constexpr double kBoundaryTolerance = 1e-9;

struct CoordinateOptions {
  int workers = 1;  // threads over baselines of one explicand
};

struct ExplicandOutcome {
  std::string explicand_id;
  bool ok = false;
  std::string error;  // set when !ok
  AttributionReport raw;     // raw feature space
  AttributionReport scores;  // meta-input space (scores ++ own features)
};

struct CoordinationResult {
  std::vector<ExplicandOutcome> outcomes;  // input order
  bool partial() const;
};

/// The party owning the meta-model. `data` holds, keyed by sample id, one
/// column per meta input: the purchased score values and the coordinator's
/// own features. Meta-pipeline feature names are required.
class Coordinator {
 public:
  Coordinator(Pipeline meta, Dataset data, std::vector<NodeDescriptor> registry, Transport& transport);

  /// Raw output order: meta inputs in order, each score replaced by the
  /// owning node's advertised features (a node's features appear once).
  const std::vector<std::string>& raw_feature_names() const { return raw_names_; }
  const std::vector<std::string>& meta_inputs() const { return meta_.feature_names(); }

  /// Throws kEmptyBaselineSet before any traffic when `baseline_ids` is empty.
  /// A failing node marks only the affected explicands as failed.
  /// `labels` is empty or parallel to `explicand_ids`.
  CoordinationResult coordinate(const std::vector<std::string>& explicand_ids,
                                const std::vector<std::string>& baseline_ids,
                                const CoordinateOptions& options = {},
                                const std::vector<std::optional<double>>& labels = {}) const;

  /// One explicand; throws on any failure.
  ExplicandOutcome explain(const std::string& explicand_id, const std::vector<std::string>& baseline_ids,
                           const CoordinateOptions& options = {},
                           std::optional<double> label = std::nullopt) const;

 private:
  struct Input {
    bool is_score = false;
    const NodeDescriptor* node = nullptr;
    Index raw_slot = 0;  // own features only
  };

  struct PairResult {
    Vector raw;
    Vector meta;
    long degenerate = 0;
  };

  PairResult pair(const std::string& set_id, const std::string& explicand, const std::string& baseline,
                  const Vector& xe, const Vector& xb, std::optional<double> label) const;

  Pipeline meta_;
  Dataset data_;
  std::vector<NodeDescriptor> registry_;
  Transport& transport_;
  std::vector<Input> inputs_;
  std::vector<std::string> raw_names_;
  std::map<std::string, Index> raw_index_;
};

}  // namespace seriesshap::distributed

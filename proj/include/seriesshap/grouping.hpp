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

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "seriesshap/model_ir.hpp"

namespace seriesshap {

inline constexpr const char* kResidualGroupName = "residual";
inline constexpr double kGroupNormalizationEpsilon = 1e-12;

struct FeatureGroup {
  std::string name;
  std::vector<Index> members;
  // Optional per-member weights applied before summation (default 1).
  std::vector<double> weights;
};

/// Named, possibly overlapping groups. The residual group (features in no
/// listed group) is derived, never supplied.
class GroupSpec {
 public:
  GroupSpec(std::vector<FeatureGroup> groups, Index num_features);

  const std::vector<FeatureGroup>& groups() const { return groups_; }
  const std::vector<Index>& residual() const { return residual_; }
  Index num_features() const { return num_features_; }
  bool disjoint() const { return disjoint_; }
  bool weighted() const;

 private:
  std::vector<FeatureGroup> groups_;
  std::vector<Index> residual_;
  Index num_features_;
  bool disjoint_ = true;
};

/// {"groups": {"name": [feature names or indices], ...}}; names resolve
/// against `feature_names`.
GroupSpec load_group_spec(const nlohmann::ordered_json& doc, const std::vector<std::string>& feature_names);
GroupSpec load_group_spec_file(const std::string& path, const std::vector<std::string>& feature_names);

struct GroupAttribution {
  std::vector<std::string> names;  // listed groups then the residual
  Vector raw;                      // plain (weighted) sums
  Vector values;                   // after rescaling
  double factor = 1.0;
  bool rescaled = false;
  bool unnormalizable = false;
};

/// Sums attributions per group plus residual. Overlapping or weighted specs
/// are rescaled by sum(phi) / sum(raw) so the group values keep efficiency;
/// when |sum(raw)| <= eps * sum|raw| the raw sums are returned and flagged.
GroupAttribution group_attr(const Vector& phi, const GroupSpec& spec);

}  // namespace seriesshap

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

#include "seriesshap/grouping.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace seriesshap {

using json = nlohmann::ordered_json;

GroupSpec::GroupSpec(std::vector<FeatureGroup> groups, Index num_features)
    : groups_(std::move(groups)), num_features_(num_features) {
  std::set<std::string> names;
  std::vector<int> covered(num_features, 0);
  for (const auto& g : groups_) {
    if (g.name.empty()) fail(ErrorCode::kInvalidGroup, "group with empty name");
    if (g.name == kResidualGroupName) fail(ErrorCode::kInvalidGroup, "'residual' is reserved");
    if (!names.insert(g.name).second) fail(ErrorCode::kInvalidGroup, "duplicate group name '" + g.name + "'");
    if (!g.weights.empty() && g.weights.size() != g.members.size()) {
      fail(ErrorCode::kInvalidGroup, "group '" + g.name + "' has " + std::to_string(g.weights.size()) +
                                         " weights for " + std::to_string(g.members.size()) + " members");
    }
    std::set<Index> seen;
    for (Index i : g.members) {
      if (i < 0 || i >= num_features) {
        fail(ErrorCode::kIndexOutOfRange, "group '" + g.name + "' member " + std::to_string(i));
      }
      if (!seen.insert(i).second) fail(ErrorCode::kInvalidGroup, "group '" + g.name + "' repeats member");
      if (covered[i]++) disjoint_ = false;
    }
  }
  for (Index i = 0; i < num_features; ++i) {
    if (!covered[i]) residual_.push_back(i);
  }
}

bool GroupSpec::weighted() const {
  return std::any_of(groups_.begin(), groups_.end(), [](const FeatureGroup& g) {
    return std::any_of(g.weights.begin(), g.weights.end(), [](double w) { return w != 1.0; });
  });
}

GroupSpec load_group_spec(const json& doc, const std::vector<std::string>& feature_names) {
  if (!doc.is_object() || !doc.contains("groups") || !doc["groups"].is_object()) {
    fail(ErrorCode::kParse, "group spec: expected {\"groups\": {name: [members]}}");
  }
  for (const auto& [key, _] : doc.items()) {
    if (key != "groups") fail(ErrorCode::kUnknownField, "group spec: '" + key + "'");
  }
  std::vector<FeatureGroup> groups;
  for (const auto& [name, members] : doc["groups"].items()) {
    if (!members.is_array()) fail(ErrorCode::kParse, "group '" + name + "': expected an array");
    FeatureGroup g;
    g.name = name;
    for (const auto& m : members) {
      if (m.is_number_integer()) {
        g.members.push_back(m.get<Index>());
      } else if (m.is_string()) {
        auto it = std::find(feature_names.begin(), feature_names.end(), m.get<std::string>());
        if (it == feature_names.end()) {
          fail(ErrorCode::kInvalidGroup, "group '" + name + "' names unknown feature '" + m.get<std::string>() + "'");
        }
        g.members.push_back(static_cast<Index>(it - feature_names.begin()));
      } else {
        fail(ErrorCode::kParse, "group '" + name + "': members must be names or indices");
      }
    }
    groups.push_back(std::move(g));
  }
  return GroupSpec(std::move(groups), static_cast<Index>(feature_names.size()));
}

GroupSpec load_group_spec_file(const std::string& path, const std::vector<std::string>& feature_names) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open group spec '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return load_group_spec(json::parse(buf.str()), feature_names);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kParse, path + ": " + e.what());
  }
}

GroupAttribution group_attr(const Vector& phi, const GroupSpec& spec) {
  if (phi.size() != spec.num_features()) {
    fail(ErrorCode::kShapeMismatch, "attribution width " + std::to_string(phi.size()) + " vs group spec over " +
                                        std::to_string(spec.num_features()) + " features");
  }
  if (!phi.allFinite()) fail(ErrorCode::kNonFinite, "group_attr attributions");
  const Index n = static_cast<Index>(spec.groups().size()) + 1;
  GroupAttribution out;
  out.raw = Vector::Zero(n);
  for (Index g = 0; g + 1 < n; ++g) {
    const FeatureGroup& group = spec.groups()[g];
    out.names.push_back(group.name);
    for (std::size_t j = 0; j < group.members.size(); ++j) {
      const double w = group.weights.empty() ? 1.0 : group.weights[j];
      out.raw(g) += w * phi(group.members[j]);
    }
  }
  out.names.push_back(kResidualGroupName);
  for (Index i : spec.residual()) out.raw(n - 1) += phi(i);
  out.values = out.raw;

  if (spec.disjoint() && !spec.weighted()) return out;

  const double total_raw = out.raw.sum();
  const double threshold = kGroupNormalizationEpsilon * out.raw.cwiseAbs().sum();
  if (!(std::abs(total_raw) > threshold)) {
    out.unnormalizable = true;
    return out;
  }
  out.factor = phi.sum() / total_raw;
  out.values = out.raw * out.factor;
  out.rescaled = true;
  return out;
}

}  // namespace seriesshap

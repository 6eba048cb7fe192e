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

#include "seriesshap/model_ir.hpp"

namespace seriesshap {

struct UniformProvenance {
  std::uint64_t seed = 0;
  Index requested = 0;
};

struct ClusterProvenance {
  Index cluster = 0;
  Vector centroid;
};

/// Ordered baseline samples (one per row) with a content-derived identifier.
class BaselineSet {
 public:
  BaselineSet(Matrix samples, std::vector<std::string> sample_ids = {});

  Index size() const { return samples_.rows(); }
  Index width() const { return samples_.cols(); }
  const Matrix& samples() const { return samples_; }
  Vector sample(Index i) const { return samples_.row(i).transpose(); }
  const std::vector<std::string>& sample_ids() const { return sample_ids_; }
  // SHA-256 (hex) of the canonical text of ids and values.
  const std::string& id() const { return id_; }

  std::optional<UniformProvenance> uniform;
  std::optional<ClusterProvenance> cluster;

 private:
  Matrix samples_;
  std::vector<std::string> sample_ids_;
  std::string id_;
};

std::string sha256_hex(const std::string& bytes);

/// Canonical hash of a baseline set that parties can compute without seeing
/// each other's columns: only the ordered sample identifiers enter it.
std::string id_set_hash(const std::vector<std::string>& sample_ids);

}  // namespace seriesshap

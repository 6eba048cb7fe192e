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

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "seriesshap/baseline_set.hpp"
#include "seriesshap/dataset.hpp"

namespace seriesshap {

/// n distinct rows drawn without replacement (partial Fisher-Yates driven by
/// mt19937_64, whose output sequence is fixed by the standard).
BaselineSet uniform_sample(const Dataset& data, Index n, std::uint64_t seed);

struct KMeansOptions {
  Index k = 8;
  std::uint64_t seed = 0;
  int max_iter = 300;
  double tol = 1e-6;
};

struct ClusterModel {
  Matrix centroids;  // k x r
  std::vector<std::string> reduced_features;
  std::vector<Index> assignments;
  double objective = 0.0;
  // Objective after the initial assignment and after every Lloyd iteration.
  std::vector<double> objective_history;
  int iterations = 0;
  bool converged = false;

  Index k() const { return centroids.rows(); }
};

/// Lloyd's algorithm from k-means++ seeding. Raw feature scale is used as
/// is; standardize beforehand if features have different units. An empty
/// cluster is re-seeded at the point farthest from its current centroid.
ClusterModel kmeans_fit(const Matrix& data_reduced, const KMeansOptions& options,
                        std::vector<std::string> reduced_features = {});

/// Nearest centroid by squared Euclidean distance, ties to the lower index.
Index assign_baseline_cluster(const ClusterModel& model, const Vector& x_reduced);

/// Training rows assigned to `cluster`, in data order, as a baseline set.
BaselineSet cluster_baselines(const ClusterModel& model, const Dataset& data, Index cluster);

nlohmann::ordered_json to_json(const ClusterModel& m);
ClusterModel cluster_model_from_json(const nlohmann::ordered_json& doc);

/// Uniform integer in [0, n) by rejection, independent of the standard
/// library's distribution implementations.
std::uint64_t bounded_random(std::mt19937_64& rng, std::uint64_t n);
double unit_random(std::mt19937_64& rng);

}  // namespace seriesshap

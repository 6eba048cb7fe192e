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
#include <utility>
#include <vector>

#include "json.hpp"
#include "seriesshap/baseline_set.hpp"
#include "seriesshap/model_ir.hpp"

namespace seriesshap {

/// a ./ b with the convention a_i / 0 = 0 (exact zero test on b_i).
template <typename DA, typename DB>
Eigen::Matrix<typename DA::Scalar, Eigen::Dynamic, 1> hadamard_div(const Eigen::MatrixBase<DA>& a,
                                                                   const Eigen::MatrixBase<DB>& b) {
  using Scalar = typename DA::Scalar;
  if (a.size() != b.size()) {
    fail(ErrorCode::kWidthMismatch, "hadamard_div: lengths " + std::to_string(a.size()) + " and " +
                                        std::to_string(b.size()));
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(a.size());
  for (Index i = 0; i < a.size(); ++i) out(i) = b(i) != Scalar(0) ? a(i) / b(i) : Scalar(0);
  return out;
}

enum class EfficiencyCheck { kAlways, kSampled, kOff };

#ifdef NDEBUG
inline constexpr EfficiencyCheck kDefaultEfficiencyCheck = EfficiencyCheck::kSampled;
#else
inline constexpr EfficiencyCheck kDefaultEfficiencyCheck = EfficiencyCheck::kAlways;
#endif

inline constexpr double kChainEfficiencyTolerance = 1e-8;
inline constexpr int kEfficiencySampleEvery = 64;

/// Back-propagated attributions for one (explicand, baseline) pair.
struct ChainTrace {
  // psi[i] has the input width of stage i; psi.front() is the attribution in
  // raw feature space and psi.back() = phi-hat(h_k) * seed.
  std::vector<Vector> psi;
  // f_i(x_e) - f_i(x_b) for i = 1..k.
  std::vector<Vector> output_deltas;
  double final_delta = 0.0;
  long degenerate_divisions = 0;

  const Vector& attributions() const { return psi.front(); }
};

struct ChainOptions {
  std::optional<double> label;
  EfficiencyCheck check = kDefaultEfficiencyCheck;
  double tolerance = kChainEfficiencyTolerance;
};

/// Generalized rescale rule on precomputed forward traces. `seed` weights the
/// final outputs: the scalar case uses seed = [1]. Every psi sums to
/// seed . (f_k(x_e) - f_k(x_b)).
ChainTrace propagate(const Pipeline& p, const ForwardTrace& te, const ForwardTrace& tb, const Vector& seed,
                     std::optional<double> label = std::nullopt,
                     EfficiencyCheck check = kDefaultEfficiencyCheck,
                     double tolerance = kChainEfficiencyTolerance);

ChainTrace chain_single_baseline(const Pipeline& p, const Vector& xe, const Vector& xb,
                                 const ChainOptions& options = {});

struct ReportFlags {
  long degenerate_divisions = 0;
  std::vector<std::string> notes;

  bool operator==(const ReportFlags&) const = default;
};

struct AttributionReport {
  std::string explicand_id;
  std::vector<std::string> feature_names;
  Vector attributions;
  double expected_value = 0.0;  // mean of f_k over the baselines
  double prediction = 0.0;      // f_k(x_e)
  std::string baseline_set_id;
  ReportFlags flags;
  std::vector<ChainTrace> traces;  // filled only when requested
};

struct DistributionOptions {
  ChainOptions chain;
  int workers = 1;
  bool retain_traces = false;
};

/// Mean of single-baseline chains over the set, reduced pairwise in
/// baseline order so the result does not depend on `workers`.
AttributionReport chain_with_distribution(const Pipeline& p, const Vector& xe, const BaselineSet& baselines,
                                          const DistributionOptions& options = {},
                                          std::string explicand_id = {});

/// Weighted sum of member reports over the same explicand and baselines.
AttributionReport ensemble_attr(const std::vector<std::pair<double, AttributionReport>>& members);

nlohmann::ordered_json to_json(const AttributionReport& r);
AttributionReport report_from_json(const nlohmann::ordered_json& doc);
/// Wide form: explicand_id, one column per feature, expected_value.
std::string reports_to_csv(const std::vector<AttributionReport>& reports);

}  // namespace seriesshap

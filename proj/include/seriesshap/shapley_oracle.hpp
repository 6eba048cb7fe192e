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
#include <functional>
#include <vector>

#include "seriesshap/baseline_set.hpp"
#include "seriesshap/model_ir.hpp"

namespace seriesshap {

/// Hard limit on players for subset enumeration (2^20 evaluations).
inline constexpr int kMaxPlayers = 20;
/// Permutation enumeration is only offered as a cross-check for small games.
inline constexpr int kMaxPermutationPlayers = 10;

/// Bit j set means player j is in the coalition.
using Coalition = std::uint32_t;

struct SetFunction {
  int arity = 0;
  std::function<double(Coalition)> eval;
};

/// phi_i = sum_{S not containing i} |S|!(m-|S|-1)!/m! (v(S+i) - v(S)).
/// Summation runs in increasing coalition order, so results are reproducible.
Vector exact_shapley(const SetFunction& v);

/// Average marginal contribution over all m! orderings. Independent route
/// used to cross-check exact_shapley on small games.
Vector exact_shapley_permutations(const SetFunction& v);

using ScalarModel = std::function<double(const Vector&)>;

/// Shapley values of S -> f(splice(xe, xb, S)).
Vector single_baseline_shapley(const ScalarModel& f, const Vector& xe, const Vector& xb);

/// Mean of single-baseline Shapley values over the rows of `baselines`.
Vector interventional_shapley(const ScalarModel& f, const Vector& xe, const Matrix& baselines);
Vector interventional_shapley(const ScalarModel& f, const Vector& xe, const BaselineSet& baselines);

ScalarModel scalar_model(const Pipeline& p, std::optional<double> label = std::nullopt);

struct Partition {
  std::vector<std::vector<Index>> blocks;

  /// Throws kInvalidPartition unless the blocks are non-empty, disjoint and
  /// cover [0, m).
  void validate(Index m) const;
  static Partition singletons(Index m);
  static Partition whole(Index m);
};

/// Which coordinate the two-way sign split looks at.
enum class SplitVariable { kExplicand, kBaseline, kDelta };

/// Two blocks: {i : beta_i * z_i > threshold} and the rest, where z is the
/// explicand, the baseline or their difference. Empty blocks are dropped.
Partition sign_split_partition(const Stage& linear, const Vector& xe, const Vector& xb,
                               SplitVariable var = SplitVariable::kExplicand, double threshold = 0.0);

struct KPartitionResult {
  Vector attributions;
  Vector block_values;            // Shapley value of each block as a super-player
  int uniform_spread_blocks = 0;  // blocks whose linear delta was exactly 0
};

/// k-partition approximation for a stage nonlin(g(x)) with g a one-output
/// linear stage: exact Shapley over blocks, then each block's value is split
/// across its members in proportion to beta_i (xe_i - xb_i). A block whose
/// linear delta is exactly 0 spreads its value uniformly.
KPartitionResult kpartition_attribution(const Stage& linear, Activation nonlin, const Partition& partition,
                                        const Vector& xe, const Vector& xb);

}  // namespace seriesshap

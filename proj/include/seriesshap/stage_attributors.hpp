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

#include "seriesshap/model_ir.hpp"

namespace seriesshap {

/// phi-hat for one stage: an (inputs x outputs) matrix whose column o sums
/// to the stage's output delta o, with all-zero rows for unchanged inputs.
struct StageAttribution {
  Matrix matrix;
  Vector input_delta;
  Vector output_delta;
  // Zero-denominator divisions met inside nested chains (parallel blocks).
  long degenerate_divisions = 0;
};

StageAttribution linear_stage_attr(const Stage& stage, const Vector& xe_in, const Vector& xb_in);

/// Diagonal matrix of per-coordinate output deltas (the Rescale rule, exact
/// for elementwise maps).
StageAttribution activation_stage_attr(const Stage& stage, const Vector& xe_in, const Vector& xb_in);

/// Exact single-baseline Shapley values of each tree over the features it
/// splits on that differ between explicand and baseline, combined with the
/// tree weights. Throws kActiveFeatureGuard past kMaxPlayers active features.
StageAttribution tree_stage_attr(const Stage& stage, const Vector& xe_in, const Vector& xb_in);

/// Single-baseline Shapley values for one tree; inactive features get 0.
Vector tree_shapley(const Tree& tree, const Vector& xe, const Vector& xb, int tree_index = 0);

StageAttribution transform_stage_attr(const Stage& stage, const Vector& xe_in, const Vector& xb_in,
                                      std::optional<double> label = std::nullopt);

/// Block (input slice x output slice) sub-matrices come from the chain of each
/// sub-pipeline; passthrough pairs carry their input delta.
StageAttribution parallel_block_attr(const Stage& stage, const Vector& xe_in, const Vector& xb_in,
                                     std::optional<double> label = std::nullopt);

/// Dispatch on stage kind.
StageAttribution stage_attr(const Stage& stage, const Vector& xe_in, const Vector& xb_in,
                            std::optional<double> label = std::nullopt);

}  // namespace seriesshap

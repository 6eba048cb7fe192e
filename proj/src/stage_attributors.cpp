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

#include "seriesshap/stage_attributors.hpp"

#include <vector>

#include "seriesshap/chain_engine.hpp"
#include "seriesshap/shapley_oracle.hpp"

namespace seriesshap {

namespace {

void check_inputs(const Stage& stage, StageKind expected, const Vector& xe_in, const Vector& xb_in) {
  if (stage.kind() != expected) {
    fail(ErrorCode::kInvalidArgument, "expected a " + std::string(to_string(expected)) + " stage, got " +
                                          std::string(to_string(stage.kind())));
  }
  if (xe_in.size() != stage.input_width() || xb_in.size() != stage.input_width()) {
    fail(ErrorCode::kWidthMismatch, std::string(to_string(expected)) + " stage expects width " +
                                        std::to_string(stage.input_width()) + ", got " + std::to_string(xe_in.size()) +
                                        " and " + std::to_string(xb_in.size()));
  }
}

StageAttribution make(const Stage& stage, const Vector& xe_in, const Vector& xb_in, std::optional<double> label) {
  StageAttribution a;
  a.input_delta = xe_in - xb_in;
  a.output_delta = stage.evaluate(xe_in, label) - stage.evaluate(xb_in, label);
  return a;
}

}  // namespace

StageAttribution linear_stage_attr(const Stage& stage, const Vector& xe_in, const Vector& xb_in) {
  check_inputs(stage, StageKind::kLinear, xe_in, xb_in);
  const auto& lin = stage.as<LinearStage>();
  StageAttribution a = make(stage, xe_in, xb_in, std::nullopt);
  // matrix(j, o) = W(o, j) * dx_j
  a.matrix = a.input_delta.asDiagonal() * lin.weights.transpose();
  return a;
}

StageAttribution activation_stage_attr(const Stage& stage, const Vector& xe_in, const Vector& xb_in) {
  check_inputs(stage, StageKind::kActivation, xe_in, xb_in);
  StageAttribution a = make(stage, xe_in, xb_in, std::nullopt);
  a.matrix = a.output_delta.asDiagonal();
  return a;
}

Vector tree_shapley(const Tree& tree, const Vector& xe, const Vector& xb, int tree_index) {
  std::vector<Index> active;
  for (int f : tree.used_features()) {
    if (xe(f) != xb(f)) active.push_back(f);
  }
  const int a = static_cast<int>(active.size());
  if (a > kMaxPlayers) {
    fail(ErrorCode::kActiveFeatureGuard, "tree " + std::to_string(tree_index) + " has " + std::to_string(a) +
                                             " active features (limit " + std::to_string(kMaxPlayers) + ")");
  }
  Vector phi = Vector::Zero(xe.size());
  if (a == 0) return phi;
  Vector chi(xe.size());
  const Vector local = exact_shapley(SetFunction{a, [&](Coalition s) {
                                                  splice_mask_into(xe, xb, active, s, chi);
                                                  return tree.predict(chi);
                                                }});
  for (int j = 0; j < a; ++j) phi(active[j]) = local(j);
  return phi;
}

StageAttribution tree_stage_attr(const Stage& stage, const Vector& xe_in, const Vector& xb_in) {
  check_inputs(stage, StageKind::kTreeEnsemble, xe_in, xb_in);
  const auto& ens = stage.as<TreeEnsembleStage>();
  if (!xe_in.allFinite() || !xb_in.allFinite()) fail(ErrorCode::kNonFinite, "tree ensemble input");
  StageAttribution a = make(stage, xe_in, xb_in, std::nullopt);
  Vector column = Vector::Zero(stage.input_width());
  for (std::size_t t = 0; t < ens.trees.size(); ++t) {
    column += ens.tree_weights[t] * tree_shapley(ens.trees[t], xe_in, xb_in, static_cast<int>(t));
  }
  a.matrix = column;
  return a;
}

StageAttribution transform_stage_attr(const Stage& stage, const Vector& xe_in, const Vector& xb_in,
                                      std::optional<double> label) {
  check_inputs(stage, StageKind::kTransform, xe_in, xb_in);
  StageAttribution a = make(stage, xe_in, xb_in, label);
  const auto& t = stage.as<TransformStage>();
  a.matrix = Matrix::Zero(stage.input_width(), 1);
  if (t.kind == TransformKind::kSelect) {
    a.matrix(t.index, 0) = a.input_delta(t.index);
  } else {
    a.matrix(0, 0) = a.output_delta(0);
  }
  return a;
}

StageAttribution parallel_block_attr(const Stage& stage, const Vector& xe_in, const Vector& xb_in,
                                     std::optional<double> label) {
  check_inputs(stage, StageKind::kParallelBlock, xe_in, xb_in);
  const auto& pb = stage.as<ParallelBlockStage>();
  StageAttribution a = make(stage, xe_in, xb_in, label);
  a.matrix = Matrix::Zero(stage.input_width(), stage.output_width());
  for (const auto& block : pb.blocks) {
    const Index n_in = static_cast<Index>(block.inputs.size());
    Vector se(n_in), sb(n_in);
    for (Index j = 0; j < n_in; ++j) {
      se(j) = xe_in(block.inputs[j]);
      sb(j) = xb_in(block.inputs[j]);
    }
    const ForwardTrace te = evaluate(*block.pipeline, se, label);
    const ForwardTrace tb = evaluate(*block.pipeline, sb, label);
    for (std::size_t o = 0; o < block.outputs.size(); ++o) {
      Vector seed = Vector::Zero(block.pipeline->output_width());
      seed(static_cast<Index>(o)) = 1.0;
      const ChainTrace sub = propagate(*block.pipeline, te, tb, seed, label);
      a.degenerate_divisions += sub.degenerate_divisions;
      for (Index j = 0; j < n_in; ++j) a.matrix(block.inputs[j], block.outputs[o]) = sub.psi.front()(j);
    }
  }
  for (const auto& [i, o] : pb.passthrough) a.matrix(i, o) = a.input_delta(i);
  return a;
}

StageAttribution stage_attr(const Stage& stage, const Vector& xe_in, const Vector& xb_in,
                            std::optional<double> label) {
  switch (stage.kind()) {
    case StageKind::kLinear: return linear_stage_attr(stage, xe_in, xb_in);
    case StageKind::kActivation: return activation_stage_attr(stage, xe_in, xb_in);
    case StageKind::kTreeEnsemble: return tree_stage_attr(stage, xe_in, xb_in);
    case StageKind::kParallelBlock: return parallel_block_attr(stage, xe_in, xb_in, label);
    case StageKind::kTransform: return transform_stage_attr(stage, xe_in, xb_in, label);
  }
  fail(ErrorCode::kInvalidArgument, "unknown stage kind");
}

}  // namespace seriesshap

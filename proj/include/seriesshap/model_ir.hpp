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

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "seriesshap/errors.hpp"

namespace seriesshap {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Activation { kRelu, kSigmoid, kTanh, kIdentity };

// Scalar output maps. kSelect reduces a multi-output stage to one of its
// coordinates so that multi-output pipelines can be explained one output at
// a time.
enum class TransformKind { kSigmoid, kLogit, kBceLoss, kSelect };

enum class StageKind { kLinear, kActivation, kTreeEnsemble, kParallelBlock, kTransform };

std::string_view to_string(Activation a);
std::string_view to_string(TransformKind t);
std::string_view to_string(StageKind k);
Activation parse_activation(std::string_view tag);
TransformKind parse_transform(std::string_view tag);

template <typename Scalar>
Scalar activate(Activation fn, Scalar v) {
  switch (fn) {
    case Activation::kRelu: return v > Scalar(0) ? v : Scalar(0);
    case Activation::kSigmoid: return Scalar(1) / (Scalar(1) + std::exp(-v));
    case Activation::kTanh: return std::tanh(v);
    case Activation::kIdentity: return v;
  }
  return v;
}

/// Elementwise activation over any dense Eigen expression.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> apply_activation(
    Activation fn, const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return x.unaryExpr([fn](Scalar v) { return activate(fn, v); });
}

struct TreeNode {
  // feature < 0 marks a leaf.
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
  static TreeNode leaf(double v) { return TreeNode{-1, 0.0, -1, -1, v}; }
  static TreeNode split(int f, double t, int l, int r) { return TreeNode{f, t, l, r, 0.0}; }
};

/// Binary regression tree. Samples go left when value <= threshold.
class Tree {
 public:
  Tree(std::vector<TreeNode> nodes, int root);

  template <typename Derived>
  double predict(const Eigen::MatrixBase<Derived>& x) const {
    int n = root_;
    while (!nodes_[n].is_leaf()) {
      const TreeNode& node = nodes_[n];
      n = x(node.feature) <= node.threshold ? node.left : node.right;
    }
    return nodes_[n].value;
  }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int root() const { return root_; }
  int depth() const;
  // Sorted, de-duplicated feature indices appearing in split nodes.
  const std::vector<int>& used_features() const { return used_features_; }
  int max_feature() const;

 private:
  std::vector<TreeNode> nodes_;
  int root_;
  std::vector<int> used_features_;
};

class Pipeline;

struct LinearStage {
  Matrix weights;  // outputs x inputs
  Vector bias;
};

struct ActivationStage {
  Activation fn = Activation::kIdentity;
  Index width = 0;
};

struct TreeEnsembleStage {
  std::vector<Tree> trees;
  std::vector<double> tree_weights;
  double base_score = 0.0;
  Index input_width = 0;
};

struct ParallelBlock {
  std::shared_ptr<const Pipeline> pipeline;
  std::vector<Index> inputs;
  std::vector<Index> outputs;
};

struct ParallelBlockStage {
  std::vector<ParallelBlock> blocks;
  std::vector<std::pair<Index, Index>> passthrough;  // (input, output)
  Index input_width = 0;
  Index output_width = 0;
};

struct TransformStage {
  TransformKind kind = TransformKind::kSigmoid;
  Index input_width = 1;
  Index index = 0;  // kSelect only
};

/// One model h_i of a series. Construct through the validating factories.
class Stage {
 public:
  using Params = std::variant<LinearStage, ActivationStage, TreeEnsembleStage,
                              ParallelBlockStage, TransformStage>;

  static Stage linear(Matrix weights, Vector bias);
  static Stage activation(Activation fn, Index width);
  static Stage tree_ensemble(std::vector<Tree> trees, std::vector<double> weights,
                             double base_score, Index input_width);
  static Stage parallel_block(std::vector<ParallelBlock> blocks,
                              std::vector<std::pair<Index, Index>> passthrough,
                              Index input_width);
  static Stage transform(TransformKind kind, Index input_width = 1, Index index = 0);

  StageKind kind() const;
  Index input_width() const { return input_width_; }
  Index output_width() const { return output_width_; }
  const Params& params() const { return params_; }
  bool needs_label() const;

  template <typename T>
  const T& as() const { return std::get<T>(params_); }

  /// h_i(x). `label` is the side channel consumed by bce_loss transforms.
  Vector evaluate(const Vector& x, std::optional<double> label = std::nullopt) const;

 private:
  Stage(Params p, Index in, Index out)
      : params_(std::move(p)), input_width_(in), output_width_(out) {}

  Params params_;
  Index input_width_;
  Index output_width_;
};

double apply_transform(TransformKind kind, double v, std::optional<double> label);

/// Composition h_k o ... o h_1. Immutable after construction.
class Pipeline {
 public:
  explicit Pipeline(std::vector<Stage> stages, std::vector<std::string> feature_names = {});

  const std::vector<Stage>& stages() const { return stages_; }
  std::size_t size() const { return stages_.size(); }
  Index input_width() const { return stages_.front().input_width(); }
  Index output_width() const { return stages_.back().output_width(); }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  bool needs_label() const;

  /// Returns a copy with `extra` appended after the last stage.
  Pipeline then(Stage extra) const;

 private:
  std::vector<Stage> stages_;
  std::vector<std::string> feature_names_;
};

/// f_0(x) = x, f_i(x) for i = 1..k.
struct ForwardTrace {
  std::vector<Vector> values;

  const Vector& input() const { return values.front(); }
  const Vector& stage_output(std::size_t i) const { return values.at(i); }
  double output() const { return values.back()(0); }
};

ForwardTrace evaluate(const Pipeline& p, const Vector& x,
                      std::optional<double> label = std::nullopt);

/// Final-stage output only; skips building the trace.
Vector predict(const Pipeline& p, const Vector& x, std::optional<double> label = std::nullopt);

/// Scalar f_k(x). Requires a single-output pipeline.
double predict_scalar(const Pipeline& p, const Vector& x,
                      std::optional<double> label = std::nullopt);

/// chi^S: coordinates in `s` from the explicand, the rest from the baseline.
template <typename DerivedE, typename DerivedB>
Vector splice(const Eigen::MatrixBase<DerivedE>& xe, const Eigen::MatrixBase<DerivedB>& xb,
              std::span<const Index> s) {
  if (xe.size() != xb.size()) {
    fail(ErrorCode::kWidthMismatch, "splice: explicand width " + std::to_string(xe.size()) +
                                        " vs baseline width " + std::to_string(xb.size()));
  }
  Vector out = xb;
  for (Index i : s) {
    if (i < 0 || i >= xe.size()) {
      fail(ErrorCode::kIndexOutOfRange, "splice: index " + std::to_string(i) +
                                            " outside [0," + std::to_string(xe.size()) + ")");
    }
    out(i) = xe(i);
  }
  return out;
}

/// Bitmask variant used by the enumeration code (bit j selects `players[j]`).
template <typename DerivedE, typename DerivedB>
void splice_mask_into(const Eigen::MatrixBase<DerivedE>& xe, const Eigen::MatrixBase<DerivedB>& xb,
                      std::span<const Index> players, std::uint32_t mask, Vector& out) {
  out = xb;
  for (std::size_t j = 0; j < players.size(); ++j) {
    if (mask & (std::uint32_t{1} << j)) out(players[j]) = xe(players[j]);
  }
}

Pipeline load_pipeline(const nlohmann::ordered_json& doc);
Pipeline parse_pipeline(const std::string& text);
Pipeline load_pipeline_file(const std::string& path);
nlohmann::ordered_json to_json(const Pipeline& p);

}  // namespace seriesshap

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

#include "seriesshap/model_ir.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace seriesshap {

using json = nlohmann::ordered_json;

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kTanh: return "tanh";
    case Activation::kIdentity: return "identity";
  }
  return "?";
}

std::string_view to_string(TransformKind t) {
  switch (t) {
    case TransformKind::kSigmoid: return "sigmoid";
    case TransformKind::kLogit: return "logit";
    case TransformKind::kBceLoss: return "bce_loss";
    case TransformKind::kSelect: return "select";
  }
  return "?";
}

std::string_view to_string(StageKind k) {
  switch (k) {
    case StageKind::kLinear: return "linear";
    case StageKind::kActivation: return "activation";
    case StageKind::kTreeEnsemble: return "tree_ensemble";
    case StageKind::kParallelBlock: return "parallel_block";
    case StageKind::kTransform: return "transform";
  }
  return "?";
}

Activation parse_activation(std::string_view tag) {
  if (tag == "relu") return Activation::kRelu;
  if (tag == "sigmoid") return Activation::kSigmoid;
  if (tag == "tanh") return Activation::kTanh;
  if (tag == "identity") return Activation::kIdentity;
  fail(ErrorCode::kUnknownTag, "activation '" + std::string(tag) + "'");
}

TransformKind parse_transform(std::string_view tag) {
  if (tag == "sigmoid") return TransformKind::kSigmoid;
  if (tag == "logit") return TransformKind::kLogit;
  if (tag == "bce_loss") return TransformKind::kBceLoss;
  if (tag == "select") return TransformKind::kSelect;
  fail(ErrorCode::kUnknownTag, "transform '" + std::string(tag) + "'");
}

// ---------------------------------------------------------------------------
// Tree

Tree::Tree(std::vector<TreeNode> nodes, int root) : nodes_(std::move(nodes)), root_(root) {
  const int n = static_cast<int>(nodes_.size());
  if (n == 0) fail(ErrorCode::kInvalidModel, "tree has no nodes");
  if (root_ < 0 || root_ >= n) fail(ErrorCode::kInvalidModel, "tree root out of range");
  std::vector<char> seen(n, 0);
  std::set<int> used;
  std::vector<int> stack{root_};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    if (seen[id]) {
      fail(ErrorCode::kInvalidModel, "tree node " + std::to_string(id) + " reached twice (cycle or shared child)");
    }
    seen[id] = 1;
    const TreeNode& node = nodes_[id];
    if (node.is_leaf()) {
      if (!std::isfinite(node.value)) fail(ErrorCode::kNonFinite, "tree leaf " + std::to_string(id));
      continue;
    }
    if (!std::isfinite(node.threshold)) {
      fail(ErrorCode::kNonFinite, "tree threshold at node " + std::to_string(id));
    }
    for (int child : {node.left, node.right}) {
      if (child < 0 || child >= n) {
        fail(ErrorCode::kInvalidModel, "node " + std::to_string(id) + " child " + std::to_string(child) + " out of range");
      }
      stack.push_back(child);
    }
    used.insert(node.feature);
  }
  used_features_.assign(used.begin(), used.end());
}

int Tree::depth() const {
  std::vector<std::pair<int, int>> stack{{root_, 0}};
  int best = 0;
  while (!stack.empty()) {
    auto [id, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (!nodes_[id].is_leaf()) {
      stack.push_back({nodes_[id].left, d + 1});
      stack.push_back({nodes_[id].right, d + 1});
    }
  }
  return best;
}

int Tree::max_feature() const {
  return used_features_.empty() ? -1 : used_features_.back();
}

// ---------------------------------------------------------------------------
// Stage

namespace {

void check_index(Index i, Index width, const std::string& what) {
  if (i < 0 || i >= width) {
    fail(ErrorCode::kIndexOutOfRange,
         what + " index " + std::to_string(i) + " outside [0," + std::to_string(width) + ")");
  }
}

}  // namespace

Stage Stage::linear(Matrix weights, Vector bias) {
  if (weights.rows() == 0 || weights.cols() == 0) fail(ErrorCode::kInvalidModel, "linear stage with empty weights");
  if (bias.size() != weights.rows()) {
    fail(ErrorCode::kWidthMismatch, "linear bias length " + std::to_string(bias.size()) +
                                        " != output width " + std::to_string(weights.rows()));
  }
  if (!weights.allFinite() || !bias.allFinite()) fail(ErrorCode::kNonFinite, "linear parameters");
  const Index in = weights.cols();
  const Index out = weights.rows();
  return Stage(LinearStage{std::move(weights), std::move(bias)}, in, out);
}

Stage Stage::activation(Activation fn, Index width) {
  if (width <= 0) fail(ErrorCode::kInvalidModel, "activation width must be positive");
  return Stage(ActivationStage{fn, width}, width, width);
}

Stage Stage::tree_ensemble(std::vector<Tree> trees, std::vector<double> weights, double base_score,
                           Index input_width) {
  if (trees.empty()) fail(ErrorCode::kInvalidModel, "tree ensemble without trees");
  if (weights.empty()) weights.assign(trees.size(), 1.0);
  if (weights.size() != trees.size()) {
    fail(ErrorCode::kWidthMismatch, "tree_weights has " + std::to_string(weights.size()) + " entries for " +
                                        std::to_string(trees.size()) + " trees");
  }
  if (input_width <= 0) fail(ErrorCode::kInvalidModel, "tree ensemble input width must be positive");
  for (std::size_t t = 0; t < trees.size(); ++t) {
    if (trees[t].max_feature() >= input_width) {
      fail(ErrorCode::kIndexOutOfRange, "tree " + std::to_string(t) + " splits on feature " +
                                            std::to_string(trees[t].max_feature()) + " but input width is " +
                                            std::to_string(input_width));
    }
    if (!std::isfinite(weights[t])) fail(ErrorCode::kNonFinite, "tree weight");
  }
  if (!std::isfinite(base_score)) fail(ErrorCode::kNonFinite, "base_score");
  return Stage(TreeEnsembleStage{std::move(trees), std::move(weights), base_score, input_width}, input_width, 1);
}

Stage Stage::parallel_block(std::vector<ParallelBlock> blocks,
                            std::vector<std::pair<Index, Index>> passthrough, Index input_width) {
  if (input_width <= 0) fail(ErrorCode::kInvalidModel, "parallel block input width must be positive");
  Index out_width = static_cast<Index>(passthrough.size());
  for (const auto& b : blocks) out_width += static_cast<Index>(b.outputs.size());
  if (out_width == 0) fail(ErrorCode::kInvalidModel, "parallel block produces no outputs");
  std::vector<int> produced(out_width, 0);
  for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
    const auto& b = blocks[bi];
    const std::string where = "parallel block " + std::to_string(bi);
    if (!b.pipeline) fail(ErrorCode::kInvalidModel, where + " has no pipeline");
    if (b.pipeline->input_width() != static_cast<Index>(b.inputs.size())) {
      fail(ErrorCode::kWidthMismatch, where + ": sub-pipeline input width " + std::to_string(b.pipeline->input_width()) +
                                          " != " + std::to_string(b.inputs.size()) + " input indices");
    }
    if (b.pipeline->output_width() != static_cast<Index>(b.outputs.size())) {
      fail(ErrorCode::kWidthMismatch, where + ": sub-pipeline output width " + std::to_string(b.pipeline->output_width()) +
                                          " != " + std::to_string(b.outputs.size()) + " output indices");
    }
    std::set<Index> distinct;
    for (Index i : b.inputs) {
      check_index(i, input_width, where + " input");
      if (!distinct.insert(i).second) fail(ErrorCode::kInvalidModel, where + " repeats input " + std::to_string(i));
    }
    for (Index o : b.outputs) {
      check_index(o, out_width, where + " output");
      ++produced[o];
    }
  }
  for (const auto& [i, o] : passthrough) {
    check_index(i, input_width, "passthrough input");
    check_index(o, out_width, "passthrough output");
    ++produced[o];
  }
  for (Index o = 0; o < out_width; ++o) {
    if (produced[o] != 1) {
      fail(ErrorCode::kInvalidModel, "parallel block output " + std::to_string(o) + " produced " +
                                         std::to_string(produced[o]) + " times");
    }
  }
  return Stage(ParallelBlockStage{std::move(blocks), std::move(passthrough), input_width, out_width}, input_width,
               out_width);
}

Stage Stage::transform(TransformKind kind, Index input_width, Index index) {
  if (kind == TransformKind::kSelect) {
    if (input_width <= 0) fail(ErrorCode::kInvalidModel, "select input width must be positive");
    check_index(index, input_width, "select");
  } else if (input_width != 1) {
    fail(ErrorCode::kWidthMismatch, std::string(to_string(kind)) + " transform takes a scalar input, got width " +
                                        std::to_string(input_width));
  }
  return Stage(TransformStage{kind, input_width, index}, input_width, 1);
}

StageKind Stage::kind() const {
  return static_cast<StageKind>(params_.index());
}

bool Stage::needs_label() const {
  if (const auto* t = std::get_if<TransformStage>(&params_)) return t->kind == TransformKind::kBceLoss;
  if (const auto* p = std::get_if<ParallelBlockStage>(&params_)) {
    for (const auto& b : p->blocks) {
      if (b.pipeline->needs_label()) return true;
    }
  }
  return false;
}

double apply_transform(TransformKind kind, double v, std::optional<double> label) {
  switch (kind) {
    case TransformKind::kSigmoid:
      return 1.0 / (1.0 + std::exp(-v));
    case TransformKind::kLogit:
      if (!(v > 0.0 && v < 1.0)) fail(ErrorCode::kDomain, "logit input " + std::to_string(v) + " outside (0,1)");
      return std::log(v / (1.0 - v));
    case TransformKind::kBceLoss: {
      if (!label) fail(ErrorCode::kMissingLabel, "bce_loss transform needs a label");
      if (!(v > 0.0 && v < 1.0)) fail(ErrorCode::kDomain, "bce_loss input " + std::to_string(v) + " outside (0,1)");
      const double y = *label;
      return -(y * std::log(v) + (1.0 - y) * std::log1p(-v));
    }
    case TransformKind::kSelect:
      return v;
  }
  return v;
}

Vector Stage::evaluate(const Vector& x, std::optional<double> label) const {
  if (x.size() != input_width_) {
    fail(ErrorCode::kWidthMismatch, std::string(to_string(kind())) + " stage expects width " +
                                        std::to_string(input_width_) + ", got " + std::to_string(x.size()));
  }
  return std::visit(
      [&](const auto& s) -> Vector {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, LinearStage>) {
          return s.weights * x + s.bias;
        } else if constexpr (std::is_same_v<T, ActivationStage>) {
          return apply_activation(s.fn, x);
        } else if constexpr (std::is_same_v<T, TreeEnsembleStage>) {
          if (!x.allFinite()) fail(ErrorCode::kNonFinite, "tree ensemble input");
          double acc = s.base_score;
          for (std::size_t t = 0; t < s.trees.size(); ++t) acc += s.tree_weights[t] * s.trees[t].predict(x);
          return Vector::Constant(1, acc);
        } else if constexpr (std::is_same_v<T, ParallelBlockStage>) {
          Vector out(s.output_width);
          for (const auto& b : s.blocks) {
            Vector slice(static_cast<Index>(b.inputs.size()));
            for (std::size_t j = 0; j < b.inputs.size(); ++j) slice(j) = x(b.inputs[j]);
            const Vector y = predict(*b.pipeline, slice, label);
            for (std::size_t j = 0; j < b.outputs.size(); ++j) out(b.outputs[j]) = y(j);
          }
          for (const auto& [i, o] : s.passthrough) out(o) = x(i);
          return out;
        } else {
          if (s.kind == TransformKind::kSelect) return Vector::Constant(1, x(s.index));
          return Vector::Constant(1, apply_transform(s.kind, x(0), label));
        }
      },
      params_);
}

// ---------------------------------------------------------------------------
// Pipeline

Pipeline::Pipeline(std::vector<Stage> stages, std::vector<std::string> feature_names)
    : stages_(std::move(stages)), feature_names_(std::move(feature_names)) {
  if (stages_.empty()) fail(ErrorCode::kInvalidModel, "pipeline has no stages");
  for (std::size_t i = 1; i < stages_.size(); ++i) {
    if (stages_[i - 1].output_width() != stages_[i].input_width()) {
      fail(ErrorCode::kWidthMismatch, "stage " + std::to_string(i - 1) + " output width " +
                                          std::to_string(stages_[i - 1].output_width()) + " != stage " +
                                          std::to_string(i) + " input width " +
                                          std::to_string(stages_[i].input_width()));
    }
  }
  if (!feature_names_.empty() && static_cast<Index>(feature_names_.size()) != input_width()) {
    fail(ErrorCode::kWidthMismatch, std::to_string(feature_names_.size()) + " feature names for input width " +
                                        std::to_string(input_width()));
  }
}

bool Pipeline::needs_label() const {
  return std::any_of(stages_.begin(), stages_.end(), [](const Stage& s) { return s.needs_label(); });
}

Pipeline Pipeline::then(Stage extra) const {
  std::vector<Stage> stages = stages_;
  stages.push_back(std::move(extra));
  return Pipeline(std::move(stages), feature_names_);
}

ForwardTrace evaluate(const Pipeline& p, const Vector& x, std::optional<double> label) {
  if (x.size() != p.input_width()) {
    fail(ErrorCode::kWidthMismatch, "pipeline input width " + std::to_string(p.input_width()) + ", sample width " +
                                        std::to_string(x.size()));
  }
  if (!x.allFinite()) fail(ErrorCode::kNonFinite, "pipeline input");
  ForwardTrace trace;
  trace.values.reserve(p.size() + 1);
  trace.values.push_back(x);
  for (std::size_t i = 0; i < p.size(); ++i) {
    Vector y = p.stages()[i].evaluate(trace.values.back(), label);
    if (!y.allFinite()) fail(ErrorCode::kNonFinite, "output of stage " + std::to_string(i));
    trace.values.push_back(std::move(y));
  }
  return trace;
}

Vector predict(const Pipeline& p, const Vector& x, std::optional<double> label) {
  if (x.size() != p.input_width()) {
    fail(ErrorCode::kWidthMismatch, "pipeline input width " + std::to_string(p.input_width()) + ", sample width " +
                                        std::to_string(x.size()));
  }
  Vector cur = x;
  for (std::size_t i = 0; i < p.size(); ++i) {
    cur = p.stages()[i].evaluate(cur, label);
    if (!cur.allFinite()) fail(ErrorCode::kNonFinite, "output of stage " + std::to_string(i));
  }
  return cur;
}

double predict_scalar(const Pipeline& p, const Vector& x, std::optional<double> label) {
  if (p.output_width() != 1) {
    fail(ErrorCode::kWidthMismatch, "scalar prediction needs output width 1, pipeline has " +
                                        std::to_string(p.output_width()));
  }
  return predict(p, x, label)(0);
}

// ---------------------------------------------------------------------------
// JSON

namespace {

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!obj.is_object()) fail(ErrorCode::kParse, where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(ErrorCode::kUnknownField, where + ": '" + key + "'");
    }
  }
}

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(ErrorCode::kParse, where + ": missing field '" + key + "'");
  return *it;
}

double as_double(const json& v, const std::string& where) {
  if (!v.is_number()) fail(ErrorCode::kParse, where + ": expected a number");
  return v.get<double>();
}

Index as_index(const json& v, const std::string& where) {
  if (!v.is_number_integer()) fail(ErrorCode::kParse, where + ": expected an integer");
  return v.get<Index>();
}

std::vector<double> as_doubles(const json& v, const std::string& where) {
  if (!v.is_array()) fail(ErrorCode::kParse, where + ": expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_double(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<Index> as_indices(const json& v, const std::string& where) {
  if (!v.is_array()) fail(ErrorCode::kParse, where + ": expected an array");
  std::vector<Index> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_index(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

Tree parse_tree(const json& t, const std::string& where) {
  reject_unknown(t, {"nodes", "root"}, where);
  const json& nodes = require(t, "nodes", where);
  if (!nodes.is_array()) fail(ErrorCode::kParse, where + ".nodes: expected an array");
  std::vector<TreeNode> parsed;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string at = where + ".nodes[" + std::to_string(i) + "]";
    const json& n = nodes[i];
    if (n.is_object() && n.contains("value")) {
      reject_unknown(n, {"value"}, at);
      parsed.push_back(TreeNode::leaf(as_double(n["value"], at + ".value")));
    } else {
      reject_unknown(n, {"feature", "threshold", "left", "right"}, at);
      const Index f = as_index(require(n, "feature", at), at + ".feature");
      if (f < 0) fail(ErrorCode::kIndexOutOfRange, at + ".feature is negative");
      parsed.push_back(TreeNode::split(static_cast<int>(f), as_double(require(n, "threshold", at), at + ".threshold"),
                                       static_cast<int>(as_index(require(n, "left", at), at + ".left")),
                                       static_cast<int>(as_index(require(n, "right", at), at + ".right"))));
    }
  }
  const Index root = t.contains("root") ? as_index(t["root"], where + ".root") : 0;
  try {
    return Tree(std::move(parsed), static_cast<int>(root));
  } catch (const Error& e) {
    fail(e.code(), where + ": " + e.detail());
  }
}

Pipeline parse_pipeline_doc(const json& doc, const std::string& where, std::optional<Index> default_width);

Stage parse_stage(const json& s, const std::string& where, std::optional<Index> prev_width) {
  if (!s.is_object()) fail(ErrorCode::kParse, where + ": expected an object");
  const std::string kind = require(s, "kind", where).get<std::string>();
  auto declared = [&](const char* key) -> std::optional<Index> {
    if (!s.contains(key)) return std::nullopt;
    return as_index(s[key], where + "." + key);
  };
  auto input_width = [&]() -> Index {
    if (auto w = declared("input_width")) return *w;
    if (prev_width) return *prev_width;
    fail(ErrorCode::kParse, where + ": cannot infer input_width for the first stage");
  };
  auto finish = [&](Stage st) {
    if (auto w = declared("input_width"); w && *w != st.input_width()) {
      fail(ErrorCode::kWidthMismatch, where + ": declared input_width " + std::to_string(*w) + " but parameters give " +
                                          std::to_string(st.input_width()));
    }
    if (auto w = declared("output_width"); w && *w != st.output_width()) {
      fail(ErrorCode::kWidthMismatch, where + ": declared output_width " + std::to_string(*w) + " but parameters give " +
                                          std::to_string(st.output_width()));
    }
    return st;
  };
  try {
    if (kind == "linear") {
      reject_unknown(s, {"kind", "weights", "bias", "input_width", "output_width"}, where);
      const json& w = require(s, "weights", where);
      if (!w.is_array() || w.empty()) fail(ErrorCode::kParse, where + ".weights: expected a non-empty array of rows");
      const Index rows = static_cast<Index>(w.size());
      Index cols = -1;
      Matrix weights;
      for (Index r = 0; r < rows; ++r) {
        const auto row = as_doubles(w[r], where + ".weights[" + std::to_string(r) + "]");
        if (cols < 0) {
          cols = static_cast<Index>(row.size());
          weights.resize(rows, cols);
        } else if (static_cast<Index>(row.size()) != cols) {
          fail(ErrorCode::kWidthMismatch, where + ".weights: ragged rows");
        }
        for (Index c = 0; c < cols; ++c) weights(r, c) = row[c];
      }
      Vector bias = Vector::Zero(rows);
      if (s.contains("bias")) {
        const auto b = as_doubles(s["bias"], where + ".bias");
        bias = Eigen::Map<const Vector>(b.data(), static_cast<Index>(b.size()));
      }
      return finish(Stage::linear(std::move(weights), std::move(bias)));
    }
    if (kind == "activation") {
      reject_unknown(s, {"kind", "activation", "input_width", "output_width"}, where);
      return finish(Stage::activation(parse_activation(require(s, "activation", where).get<std::string>()),
                                      input_width()));
    }
    if (kind == "tree_ensemble") {
      reject_unknown(s, {"kind", "trees", "tree_weights", "base_score", "input_width", "output_width"}, where);
      const json& ts = require(s, "trees", where);
      if (!ts.is_array()) fail(ErrorCode::kParse, where + ".trees: expected an array");
      std::vector<Tree> trees;
      for (std::size_t t = 0; t < ts.size(); ++t) trees.push_back(parse_tree(ts[t], where + ".trees[" + std::to_string(t) + "]"));
      std::vector<double> weights;
      if (s.contains("tree_weights")) weights = as_doubles(s["tree_weights"], where + ".tree_weights");
      const double base = s.contains("base_score") ? as_double(s["base_score"], where + ".base_score") : 0.0;
      return finish(Stage::tree_ensemble(std::move(trees), std::move(weights), base, input_width()));
    }
    if (kind == "parallel_block") {
      reject_unknown(s, {"kind", "blocks", "passthrough", "input_width", "output_width"}, where);
      const json& bs = require(s, "blocks", where);
      if (!bs.is_array()) fail(ErrorCode::kParse, where + ".blocks: expected an array");
      std::vector<ParallelBlock> blocks;
      for (std::size_t b = 0; b < bs.size(); ++b) {
        const std::string at = where + ".blocks[" + std::to_string(b) + "]";
        reject_unknown(bs[b], {"pipeline", "inputs", "outputs"}, at);
        ParallelBlock block;
        block.inputs = as_indices(require(bs[b], "inputs", at), at + ".inputs");
        block.outputs = as_indices(require(bs[b], "outputs", at), at + ".outputs");
        block.pipeline = std::make_shared<const Pipeline>(parse_pipeline_doc(
            require(bs[b], "pipeline", at), at + ".pipeline", static_cast<Index>(block.inputs.size())));
        blocks.push_back(std::move(block));
      }
      std::vector<std::pair<Index, Index>> pass;
      if (s.contains("passthrough")) {
        const json& ps = s["passthrough"];
        if (!ps.is_array()) fail(ErrorCode::kParse, where + ".passthrough: expected an array");
        for (std::size_t i = 0; i < ps.size(); ++i) {
          const auto pair = as_indices(ps[i], where + ".passthrough[" + std::to_string(i) + "]");
          if (pair.size() != 2) fail(ErrorCode::kParse, where + ".passthrough[" + std::to_string(i) + "]: expected [input, output]");
          pass.emplace_back(pair[0], pair[1]);
        }
      }
      return finish(Stage::parallel_block(std::move(blocks), std::move(pass), input_width()));
    }
    if (kind == "transform") {
      reject_unknown(s, {"kind", "transform", "index", "input_width", "output_width"}, where);
      const TransformKind t = parse_transform(require(s, "transform", where).get<std::string>());
      const Index idx = s.contains("index") ? as_index(s["index"], where + ".index") : 0;
      Index width = 1;
      if (auto w = declared("input_width")) {
        width = *w;
      } else if (prev_width) {
        width = *prev_width;
      }
      return finish(Stage::transform(t, width, idx));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, where + ": " + e.what());
  } catch (const Error& e) {
    if (e.detail().rfind(where, 0) == 0) throw;
    fail(e.code(), where + ": " + e.detail());
  }
  fail(ErrorCode::kUnknownTag, where + ": stage kind '" + kind + "'");
}

Pipeline parse_pipeline_doc(const json& doc, const std::string& where, std::optional<Index> default_width) {
  reject_unknown(doc, {"stages", "features"}, where);
  std::vector<std::string> names;
  if (doc.contains("features")) {
    if (!doc["features"].is_array()) fail(ErrorCode::kParse, where + ".features: expected an array");
    for (const auto& n : doc["features"]) {
      if (!n.is_string()) fail(ErrorCode::kParse, where + ".features: expected strings");
      names.push_back(n.get<std::string>());
    }
    default_width = static_cast<Index>(names.size());
  }
  const json& stages = require(doc, "stages", where);
  if (!stages.is_array() || stages.empty()) fail(ErrorCode::kParse, where + ".stages: expected a non-empty array");
  std::vector<Stage> parsed;
  std::optional<Index> prev = default_width;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    Stage st = parse_stage(stages[i], where + ".stages[" + std::to_string(i) + "]", prev);
    if (prev && i > 0 && st.input_width() != *prev) {
      fail(ErrorCode::kWidthMismatch, where + ": stage " + std::to_string(i - 1) + " output width " +
                                          std::to_string(*prev) + " != stage " + std::to_string(i) +
                                          " input width " + std::to_string(st.input_width()));
    }
    prev = st.output_width();
    parsed.push_back(std::move(st));
  }
  return Pipeline(std::move(parsed), std::move(names));
}

json tree_to_json(const Tree& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes()) {
    if (n.is_leaf()) {
      nodes.push_back({{"value", n.value}});
    } else {
      nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
    }
  }
  return {{"nodes", nodes}, {"root", t.root()}};
}

json stage_to_json(const Stage& st) {
  json out;
  out["kind"] = std::string(to_string(st.kind()));
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, LinearStage>) {
          json rows = json::array();
          for (Index r = 0; r < s.weights.rows(); ++r) {
            json row = json::array();
            for (Index c = 0; c < s.weights.cols(); ++c) row.push_back(s.weights(r, c));
            rows.push_back(row);
          }
          out["weights"] = rows;
          out["bias"] = std::vector<double>(s.bias.data(), s.bias.data() + s.bias.size());
        } else if constexpr (std::is_same_v<T, ActivationStage>) {
          out["activation"] = std::string(to_string(s.fn));
          out["input_width"] = s.width;
        } else if constexpr (std::is_same_v<T, TreeEnsembleStage>) {
          json trees = json::array();
          for (const auto& t : s.trees) trees.push_back(tree_to_json(t));
          out["trees"] = trees;
          out["tree_weights"] = s.tree_weights;
          out["base_score"] = s.base_score;
          out["input_width"] = s.input_width;
        } else if constexpr (std::is_same_v<T, ParallelBlockStage>) {
          json blocks = json::array();
          for (const auto& b : s.blocks) {
            blocks.push_back({{"pipeline", to_json(*b.pipeline)}, {"inputs", b.inputs}, {"outputs", b.outputs}});
          }
          out["blocks"] = blocks;
          json pass = json::array();
          for (const auto& [i, o] : s.passthrough) pass.push_back({i, o});
          out["passthrough"] = pass;
          out["input_width"] = s.input_width;
        } else {
          out["transform"] = std::string(to_string(s.kind));
          out["input_width"] = s.input_width;
          if (s.kind == TransformKind::kSelect) out["index"] = s.index;
        }
      },
      st.params());
  return out;
}

}  // namespace

Pipeline load_pipeline(const json& doc) {
  return parse_pipeline_doc(doc, "pipeline", std::nullopt);
}

Pipeline parse_pipeline(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kParse, std::string("pipeline JSON at byte ") + std::to_string(e.byte) + ": " + e.what());
  }
  return load_pipeline(doc);
}

Pipeline load_pipeline_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open pipeline file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_pipeline(buf.str());
  } catch (const Error& e) {
    fail(e.code(), path + ": " + e.detail());
  }
}

json to_json(const Pipeline& p) {
  json out;
  if (!p.feature_names().empty()) out["features"] = p.feature_names();
  json stages = json::array();
  for (const auto& s : p.stages()) stages.push_back(stage_to_json(s));
  out["stages"] = stages;
  return out;
}

}  // namespace seriesshap

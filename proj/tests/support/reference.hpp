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

// Test-side reference implementations and random instance generators.
// Nothing here calls the library's Shapley code.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <vector>

#include "seriesshap/model_ir.hpp"

namespace ref {

using seriesshap::Activation;
using seriesshap::Index;
using seriesshap::Matrix;
using seriesshap::Pipeline;
using seriesshap::Stage;
using seriesshap::TransformKind;
using seriesshap::Tree;
using seriesshap::TreeNode;
using seriesshap::Vector;

// Shapley values straight from the subset-weight definition:
// phi_i = sum over S without i of |S|!(m-|S|-1)!/m! * (v(S+i) - v(S)),
// re-evaluating v for every term.
inline Vector subset_shapley(int m, const std::function<double(const std::vector<bool>&)>& v) {
  std::vector<long double> fact(m + 1, 1.0L);
  for (int i = 1; i <= m; ++i) fact[i] = fact[i - 1] * i;
  Vector phi = Vector::Zero(m);
  std::vector<bool> in(m);
  for (int i = 0; i < m; ++i) {
    long double acc = 0.0L;
    const unsigned long total = 1ul << m;
    for (unsigned long mask = 0; mask < total; ++mask) {
      if (mask & (1ul << i)) continue;
      int s = 0;
      for (int j = 0; j < m; ++j) {
        in[j] = (mask >> j) & 1ul;
        s += in[j];
      }
      const double without = v(in);
      in[i] = true;
      const double with = v(in);
      acc += fact[s] * fact[m - s - 1] / fact[m] * (static_cast<long double>(with) - without);
    }
    phi(i) = static_cast<double>(acc);
  }
  return phi;
}

// Average marginal contribution over all m! orderings.
inline Vector permutation_shapley(int m, const std::function<double(const std::vector<bool>&)>& v) {
  std::vector<int> order(m);
  for (int i = 0; i < m; ++i) order[i] = i;
  Vector phi = Vector::Zero(m);
  long count = 0;
  do {
    std::vector<bool> in(m, false);
    double prev = v(in);
    for (int p : order) {
      in[p] = true;
      const double cur = v(in);
      phi(p) += cur - prev;
      prev = cur;
    }
    ++count;
  } while (std::next_permutation(order.begin(), order.end()));
  return phi / static_cast<double>(count);
}

inline Vector mix(const Vector& xe, const Vector& xb, const std::vector<bool>& in) {
  Vector x = xb;
  for (Index i = 0; i < x.size(); ++i) {
    if (in[static_cast<std::size_t>(i)]) x(i) = xe(i);
  }
  return x;
}

// Single-baseline Shapley of a scalar function.
inline Vector baseline_shapley(const std::function<double(const Vector&)>& f, const Vector& xe, const Vector& xb) {
  return subset_shapley(static_cast<int>(xe.size()), [&](const std::vector<bool>& in) { return f(mix(xe, xb, in)); });
}

// Interventional Shapley: the lift is the mean over baselines of f at the
// spliced point, so the game itself is averaged before the Shapley sum.
inline Vector interventional_shapley(const std::function<double(const Vector&)>& f, const Vector& xe,
                                     const Matrix& baselines) {
  return subset_shapley(static_cast<int>(xe.size()), [&](const std::vector<bool>& in) {
    long double acc = 0.0L;
    for (Index b = 0; b < baselines.rows(); ++b) acc += f(mix(xe, baselines.row(b).transpose(), in));
    return static_cast<double>(acc / baselines.rows());
  });
}

// Tree walk written independently of Tree::predict.
inline double walk(const std::vector<TreeNode>& nodes, int root, const Vector& x) {
  int n = root;
  while (nodes[static_cast<std::size_t>(n)].feature >= 0) {
    const TreeNode& t = nodes[static_cast<std::size_t>(n)];
    n = x(t.feature) <= t.threshold ? t.left : t.right;
  }
  return nodes[static_cast<std::size_t>(n)].value;
}

inline double max_rel(const Vector& a, const Vector& b) {
  const double scale = std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), 1e-300});
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

inline double rel_sum_error(const Vector& v, double target) {
  const double scale = std::max({std::abs(target), v.cwiseAbs().sum(), 1e-300});
  return std::abs(v.sum() - target) / scale;
}

// ---- generators ---------------------------------------------------------

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline Vector random_vector(Rng& rng, Index m, double lo = -2.0, double hi = 2.0) {
  Vector v(m);
  for (Index i = 0; i < m; ++i) v(i) = uniform(rng, lo, hi);
  return v;
}

inline Stage random_linear(Rng& rng, Index in, Index out) {
  Matrix w(out, in);
  const double s = 1.0 / std::sqrt(static_cast<double>(in));
  for (Index r = 0; r < out; ++r)
    for (Index c = 0; c < in; ++c) w(r, c) = uniform(rng, -1.5, 1.5) * s;
  return Stage::linear(w, random_vector(rng, out, -0.5, 0.5));
}

inline void grow(Rng& rng, std::vector<TreeNode>& nodes, int at, int depth, int max_depth, int m) {
  if (depth >= max_depth || (depth > 0 && uniform(rng, 0, 1) < 0.2)) {
    nodes[static_cast<std::size_t>(at)] = TreeNode::leaf(uniform(rng, -2.0, 2.0));
    return;
  }
  const int left = static_cast<int>(nodes.size());
  nodes.emplace_back();
  const int right = static_cast<int>(nodes.size());
  nodes.emplace_back();
  nodes[static_cast<std::size_t>(at)] = TreeNode::split(uniform_int(rng, 0, m - 1), uniform(rng, -1.5, 1.5), left, right);
  grow(rng, nodes, left, depth + 1, max_depth, m);
  grow(rng, nodes, right, depth + 1, max_depth, m);
}

inline std::vector<TreeNode> random_tree_nodes(Rng& rng, int m, int max_depth) {
  std::vector<TreeNode> nodes(1);
  grow(rng, nodes, 0, 0, max_depth, m);
  return nodes;
}

inline Stage random_trees(Rng& rng, Index m, int n_trees, int max_depth) {
  std::vector<Tree> trees;
  std::vector<double> weights;
  for (int t = 0; t < n_trees; ++t) {
    trees.emplace_back(random_tree_nodes(rng, static_cast<int>(m), max_depth), 0);
    weights.push_back(uniform(rng, 0.2, 1.0));
  }
  return Stage::tree_ensemble(std::move(trees), std::move(weights), uniform(rng, -0.5, 0.5), m);
}

inline Pipeline random_linear_pipeline(Rng& rng, Index m, int depth) {
  std::vector<Stage> stages;
  Index w = m;
  for (int s = 0; s < depth; ++s) {
    const Index out = s + 1 == depth ? 1 : uniform_int(rng, 1, 6);
    stages.push_back(random_linear(rng, w, out));
    w = out;
  }
  return Pipeline(std::move(stages));
}

// Mixed pipeline of at most k stages ending in one output. Covers linear,
// relu/sigmoid/tanh, tree ensembles, sigmoid/logit/bce transforms and, when
// `blocks` is set, a parallel block.
inline Pipeline random_mixed_pipeline(Rng& rng, Index m, int k, bool blocks = true) {
  std::vector<Stage> stages;
  Index w = m;
  auto room = [&](int need) { return static_cast<int>(stages.size()) + need <= k; };
  while (static_cast<int>(stages.size()) < k - 1) {
    const int pick = uniform_int(rng, 0, 5);
    if (pick == 0 || (pick == 4 && w < 2)) {
      const Index out = uniform_int(rng, 1, 5);
      stages.push_back(random_linear(rng, w, out));
      w = out;
    } else if (pick == 1) {
      static const Activation acts[] = {Activation::kRelu, Activation::kSigmoid, Activation::kTanh};
      stages.push_back(Stage::activation(acts[uniform_int(rng, 0, 2)], w));
    } else if (pick == 2) {
      stages.push_back(random_trees(rng, w, uniform_int(rng, 1, 3), uniform_int(rng, 1, 4)));
      w = 1;
    } else if (pick == 3 && w == 1 && room(3)) {
      stages.push_back(Stage::transform(TransformKind::kSigmoid));
      stages.push_back(Stage::transform(uniform_int(rng, 0, 1) ? TransformKind::kLogit : TransformKind::kBceLoss));
    } else if (pick == 4 && blocks && w >= 2) {
      // Split inputs into two blocks plus one passthrough when possible.
      std::vector<Index> a, b;
      std::vector<std::pair<Index, Index>> pass;
      const Index split = w >= 3 ? w - 1 : w;
      for (Index i = 0; i < split; ++i) (i % 2 ? b : a).push_back(i);
      Index out = 0;
      std::vector<seriesshap::ParallelBlock> bl;
      auto sub = [&](const std::vector<Index>& in) {
        std::vector<Stage> s;
        const Index n = static_cast<Index>(in.size());
        const Index hidden = uniform_int(rng, 1, 3);
        s.push_back(random_linear(rng, n, hidden));
        s.push_back(Stage::activation(Activation::kTanh, hidden));
        s.push_back(random_linear(rng, hidden, 1));
        seriesshap::ParallelBlock pb;
        pb.pipeline = std::make_shared<const Pipeline>(std::move(s));
        pb.inputs = in;
        pb.outputs = {out++};
        return pb;
      };
      if (split < w) pass.emplace_back(w - 1, 0);
      bl.push_back(sub(a));
      bl.push_back(sub(b));
      for (auto& p : pass) p.second = out++;
      stages.push_back(Stage::parallel_block(std::move(bl), std::move(pass), w));
      w = out;
    } else {
      stages.push_back(Stage::activation(Activation::kSigmoid, w));
    }
  }
  if (w != 1 || stages.empty()) {
    stages.push_back(random_linear(rng, w, 1));
  }
  return Pipeline(std::move(stages));
}

// Baseline close to the explicand in some coordinates, equal in others.
inline Vector random_baseline(Rng& rng, const Vector& xe, double p_equal = 0.25) {
  Vector xb = random_vector(rng, xe.size());
  for (Index i = 0; i < xe.size(); ++i) {
    if (uniform(rng, 0, 1) < p_equal) xb(i) = xe(i);
  }
  return xb;
}

}  // namespace ref

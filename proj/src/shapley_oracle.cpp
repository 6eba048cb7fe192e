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

#include "seriesshap/shapley_oracle.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

#include "seriesshap/numeric.hpp"

namespace seriesshap {

namespace {

void check_arity(int m, int limit, const char* what) {
  if (m < 0) fail(ErrorCode::kInvalidArgument, std::string(what) + ": negative arity");
  if (m > limit) {
    fail(ErrorCode::kArityGuard, std::string(what) + ": " + std::to_string(m) + " players exceeds the limit of " +
                                     std::to_string(limit));
  }
}

std::vector<double> tabulate(const SetFunction& v) {
  const Coalition n = Coalition{1} << v.arity;
  std::vector<double> table(n);
  for (Coalition s = 0; s < n; ++s) table[s] = v.eval(s);
  return table;
}

// |S|!(m-|S|-1)!/m! = 1 / (m * C(m-1, |S|)).
std::vector<double> subset_weights(int m) {
  std::vector<double> w(m);
  double binom = 1.0;
  for (int s = 0; s < m; ++s) {
    w[s] = 1.0 / (static_cast<double>(m) * binom);
    binom = binom * (m - 1 - s) / (s + 1);
  }
  return w;
}

}  // namespace

Vector exact_shapley(const SetFunction& v) {
  check_arity(v.arity, kMaxPlayers, "exact_shapley");
  const int m = v.arity;
  Vector phi = Vector::Zero(m);
  if (m == 0) return phi;
  const std::vector<double> table = tabulate(v);
  const std::vector<double> w = subset_weights(m);
  const Coalition n = Coalition{1} << m;
  for (int i = 0; i < m; ++i) {
    const Coalition bit = Coalition{1} << i;
    double acc = 0.0;
    for (Coalition s = 0; s < n; ++s) {
      if (s & bit) continue;
      acc += w[std::popcount(s)] * (table[s | bit] - table[s]);
    }
    phi(i) = acc;
  }
  return phi;
}

Vector exact_shapley_permutations(const SetFunction& v) {
  check_arity(v.arity, kMaxPermutationPlayers, "exact_shapley_permutations");
  const int m = v.arity;
  Vector phi = Vector::Zero(m);
  if (m == 0) return phi;
  const std::vector<double> table = tabulate(v);
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  double count = 0.0;
  do {
    Coalition s = 0;
    for (int p : order) {
      const Coalition next = s | (Coalition{1} << p);
      phi(p) += table[next] - table[s];
      s = next;
    }
    count += 1.0;
  } while (std::next_permutation(order.begin(), order.end()));
  return phi / count;
}

Vector single_baseline_shapley(const ScalarModel& f, const Vector& xe, const Vector& xb) {
  if (xe.size() != xb.size()) {
    fail(ErrorCode::kWidthMismatch, "explicand width " + std::to_string(xe.size()) + " vs baseline width " +
                                        std::to_string(xb.size()));
  }
  const int m = static_cast<int>(xe.size());
  check_arity(m, kMaxPlayers, "single_baseline_shapley");
  std::vector<Index> players(m);
  std::iota(players.begin(), players.end(), Index{0});
  Vector chi(m);
  return exact_shapley(SetFunction{m, [&](Coalition s) {
                                     splice_mask_into(xe, xb, players, s, chi);
                                     return f(chi);
                                   }});
}

Vector interventional_shapley(const ScalarModel& f, const Vector& xe, const Matrix& baselines) {
  if (baselines.rows() == 0) fail(ErrorCode::kEmptyBaselineSet, "interventional_shapley");
  std::vector<Vector> per_baseline;
  per_baseline.reserve(baselines.rows());
  for (Index b = 0; b < baselines.rows(); ++b) {
    per_baseline.push_back(single_baseline_shapley(f, xe, baselines.row(b).transpose()));
  }
  return pairwise_mean(std::span<const Vector>(per_baseline));
}

Vector interventional_shapley(const ScalarModel& f, const Vector& xe, const BaselineSet& baselines) {
  return interventional_shapley(f, xe, baselines.samples());
}

ScalarModel scalar_model(const Pipeline& p, std::optional<double> label) {
  return [p, label](const Vector& x) { return predict_scalar(p, x, label); };
}

// ---------------------------------------------------------------------------
// Partitions

void Partition::validate(Index m) const {
  if (blocks.empty()) fail(ErrorCode::kInvalidPartition, "no blocks");
  std::vector<int> seen(m, 0);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].empty()) fail(ErrorCode::kInvalidPartition, "block " + std::to_string(b) + " is empty");
    for (Index i : blocks[b]) {
      if (i < 0 || i >= m) {
        fail(ErrorCode::kInvalidPartition, "block " + std::to_string(b) + " index " + std::to_string(i) + " outside [0," +
                                               std::to_string(m) + ")");
      }
      if (seen[i]++) fail(ErrorCode::kInvalidPartition, "feature " + std::to_string(i) + " in more than one block");
    }
  }
  for (Index i = 0; i < m; ++i) {
    if (!seen[i]) fail(ErrorCode::kInvalidPartition, "feature " + std::to_string(i) + " not covered");
  }
}

Partition Partition::singletons(Index m) {
  Partition p;
  for (Index i = 0; i < m; ++i) p.blocks.push_back({i});
  return p;
}

Partition Partition::whole(Index m) {
  Partition p;
  p.blocks.emplace_back(static_cast<std::size_t>(m));
  std::iota(p.blocks[0].begin(), p.blocks[0].end(), Index{0});
  return p;
}

namespace {

const LinearStage& single_output_linear(const Stage& s) {
  if (s.kind() != StageKind::kLinear) fail(ErrorCode::kInvalidArgument, "k-partition needs a linear inner stage");
  const auto& lin = s.as<LinearStage>();
  if (lin.weights.rows() != 1) {
    fail(ErrorCode::kWidthMismatch, "k-partition needs a one-output linear stage, got " +
                                        std::to_string(lin.weights.rows()) + " outputs");
  }
  return lin;
}

}  // namespace

Partition sign_split_partition(const Stage& linear, const Vector& xe, const Vector& xb, SplitVariable var,
                               double threshold) {
  const auto& lin = single_output_linear(linear);
  const Index m = linear.input_width();
  if (xe.size() != m || xb.size() != m) fail(ErrorCode::kWidthMismatch, "sign_split_partition");
  std::vector<Index> above, rest;
  for (Index i = 0; i < m; ++i) {
    double z = 0.0;
    switch (var) {
      case SplitVariable::kExplicand: z = xe(i); break;
      case SplitVariable::kBaseline: z = xb(i); break;
      case SplitVariable::kDelta: z = xe(i) - xb(i); break;
    }
    (lin.weights(0, i) * z > threshold ? above : rest).push_back(i);
  }
  Partition p;
  if (!above.empty()) p.blocks.push_back(std::move(above));
  if (!rest.empty()) p.blocks.push_back(std::move(rest));
  return p;
}

KPartitionResult kpartition_attribution(const Stage& linear, Activation nonlin, const Partition& partition,
                                        const Vector& xe, const Vector& xb) {
  const auto& lin = single_output_linear(linear);
  const Index m = linear.input_width();
  if (xe.size() != m || xb.size() != m) {
    fail(ErrorCode::kWidthMismatch, "k-partition inputs must have width " + std::to_string(m));
  }
  partition.validate(m);
  const int k = static_cast<int>(partition.blocks.size());
  check_arity(k, kMaxPlayers, "kpartition_attribution");

  auto g = [&](const Vector& x) { return linear.evaluate(x)(0); };
  Vector chi(m);
  auto splice_blocks = [&](Coalition t) {
    chi = xb;
    for (int b = 0; b < k; ++b) {
      if (t & (Coalition{1} << b)) {
        for (Index i : partition.blocks[b]) chi(i) = xe(i);
      }
    }
    return chi;
  };
  const Vector block_values = exact_shapley(
      SetFunction{k, [&](Coalition t) { return activate(nonlin, g(splice_blocks(t))); }});

  KPartitionResult out;
  out.attributions = Vector::Zero(m);
  out.block_values = block_values;
  const double g_base = g(xb);
  for (int b = 0; b < k; ++b) {
    const auto& members = partition.blocks[b];
    const double block_delta = g(splice_blocks(Coalition{1} << b)) - g_base;
    if (block_delta != 0.0) {
      const double ratio = block_values(b) / block_delta;
      for (Index i : members) out.attributions(i) = lin.weights(0, i) * (xe(i) - xb(i)) * ratio;
    } else {
      ++out.uniform_spread_blocks;
      const double share = block_values(b) / static_cast<double>(members.size());
      for (Index i : members) out.attributions(i) = share;
    }
  }
  return out;
}

}  // namespace seriesshap

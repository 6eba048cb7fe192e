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
#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace seriesshap {

/// Pairwise (cascade) summation in a fixed split order. The result depends
/// only on the order of `terms`, never on how the caller scheduled them.
template <typename T>
T pairwise_sum(std::span<const T> terms) {
  if (terms.size() == 1) return terms[0];
  if (terms.size() == 2) return terms[0] + terms[1];
  const std::size_t half = terms.size() / 2;
  return pairwise_sum(terms.first(half)) + pairwise_sum(terms.subspan(half));
}

inline double pairwise_mean(std::span<const double> terms) {
  return pairwise_sum(terms) / static_cast<double>(terms.size());
}

inline Eigen::VectorXd pairwise_mean(std::span<const Eigen::VectorXd> terms) {
  Eigen::VectorXd s = pairwise_sum(terms);
  return s / static_cast<double>(terms.size());
}

/// |sum(terms) - target| relative to the magnitude of the computation,
/// max(|target|, sum|terms|). Used for all efficiency checks.
template <typename Derived>
double efficiency_error(const Eigen::MatrixBase<Derived>& terms, double target) {
  const double scale = std::max({std::abs(target), terms.cwiseAbs().sum(), 1e-300});
  return std::abs(terms.sum() - target) / scale;
}

/// Efficiency error against the target a - b when a and b were rounded on
/// their own; their magnitudes join the scale.
template <typename Derived>
double efficiency_error(const Eigen::MatrixBase<Derived>& terms, double a, double b) {
  const double target = a - b;
  const double scale =
      std::max({std::abs(target), terms.cwiseAbs().sum(), std::abs(a), std::abs(b), 1e-300});
  return std::abs(terms.sum() - target) / scale;
}

/// max_i |a_i - b_i| / max(|a|_inf, |b|_inf), zero when both are zero.
template <typename DA, typename DB>
double max_rel_error(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  const double scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
  const double diff = (a - b).cwiseAbs().maxCoeff();
  if (diff == 0.0) return 0.0;
  return diff / scale;
}

}  // namespace seriesshap

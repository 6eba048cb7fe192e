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
#include <vector>

#include "seriesshap/model_ir.hpp"

namespace seriesshap {

/// kPositive ablates the largest positive attributions first, kNegative the
/// most negative ones; kBoth ranks every feature by |phi| so that k = m
/// replaces the whole row.
enum class AblationSign { kPositive, kNegative, kBoth };

std::string_view to_string(AblationSign s);
AblationSign parse_ablation_sign(std::string_view tag);

struct AblationCurve {
  AblationSign sign = AblationSign::kPositive;
  std::vector<double> mean_output;  // index k = 0..k_max
  // Features eligible for ablation in each row; rows stop changing once k
  // exceeds this count.
  std::vector<Index> eligible;

  Index k_max() const { return static_cast<Index>(mean_output.size()) - 1; }
};

/// Ordering used for one row: eligible feature indices, most important first,
/// ties to the lower index.
std::vector<Index> ablation_order(const Vector& phi_row, AblationSign sign);

/// Row r at step k: the first min(k, eligible) features of its ablation
/// order take the imputation value, the rest keep the explicand value.
Matrix ablated_explicands(const Matrix& explicands, const Matrix& phi, const Vector& impute, AblationSign sign,
                          Index k);

AblationCurve ablation_curve(const Pipeline& p, const Matrix& explicands, const Matrix& phi, const Vector& impute,
                             AblationSign sign, Index k_max,
                             const std::vector<std::optional<double>>& labels = {});

std::string to_csv(const AblationCurve& curve);

}  // namespace seriesshap

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

#include "seriesshap/ablation.hpp"

#include <algorithm>
#include <numeric>

#include "seriesshap/format.hpp"

namespace seriesshap {

std::string_view to_string(AblationSign s) {
  switch (s) {
    case AblationSign::kPositive: return "positive";
    case AblationSign::kNegative: return "negative";
    case AblationSign::kBoth: return "both";
  }
  return "?";
}

AblationSign parse_ablation_sign(std::string_view tag) {
  if (tag == "pos" || tag == "positive") return AblationSign::kPositive;
  if (tag == "neg" || tag == "negative") return AblationSign::kNegative;
  if (tag == "both") return AblationSign::kBoth;
  fail(ErrorCode::kUnknownTag, "ablation sign '" + std::string(tag) + "'");
}

std::vector<Index> ablation_order(const Vector& phi, AblationSign sign) {
  std::vector<Index> order;
  for (Index j = 0; j < phi.size(); ++j) {
    if (sign == AblationSign::kBoth || (sign == AblationSign::kPositive && phi(j) > 0.0) ||
        (sign == AblationSign::kNegative && phi(j) < 0.0)) {
      order.push_back(j);
    }
  }
  auto key = [&](Index j) {
    switch (sign) {
      case AblationSign::kPositive: return phi(j);
      case AblationSign::kNegative: return -phi(j);
      case AblationSign::kBoth: return std::abs(phi(j));
    }
    return phi(j);
  };
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return key(a) > key(b); });
  return order;
}

namespace {

void check_shapes(const Matrix& explicands, const Matrix& phi, const Vector& impute) {
  if (phi.rows() != explicands.rows() || phi.cols() != explicands.cols()) {
    fail(ErrorCode::kShapeMismatch, "attributions are " + std::to_string(phi.rows()) + "x" +
                                        std::to_string(phi.cols()) + ", explicands are " +
                                        std::to_string(explicands.rows()) + "x" + std::to_string(explicands.cols()));
  }
  if (impute.size() != explicands.cols()) {
    fail(ErrorCode::kShapeMismatch, "imputation sample width " + std::to_string(impute.size()));
  }
}

}  // namespace

Matrix ablated_explicands(const Matrix& explicands, const Matrix& phi, const Vector& impute, AblationSign sign,
                          Index k) {
  check_shapes(explicands, phi, impute);
  if (k < 0 || k > explicands.cols()) fail(ErrorCode::kOutOfRange, "k = " + std::to_string(k));
  Matrix out = explicands;
  for (Index r = 0; r < explicands.rows(); ++r) {
    const auto order = ablation_order(phi.row(r).transpose(), sign);
    const Index take = std::min<Index>(k, static_cast<Index>(order.size()));
    for (Index j = 0; j < take; ++j) out(r, order[j]) = impute(order[j]);
  }
  return out;
}

AblationCurve ablation_curve(const Pipeline& p, const Matrix& explicands, const Matrix& phi, const Vector& impute,
                             AblationSign sign, Index k_max, const std::vector<std::optional<double>>& labels) {
  check_shapes(explicands, phi, impute);
  if (k_max < 0 || k_max > explicands.cols()) {
    fail(ErrorCode::kOutOfRange, "k_max = " + std::to_string(k_max) + " outside [0," +
                                     std::to_string(explicands.cols()) + "]");
  }
  if (explicands.rows() == 0) fail(ErrorCode::kShapeMismatch, "no explicands");
  if (!labels.empty() && static_cast<Index>(labels.size()) != explicands.rows()) {
    fail(ErrorCode::kShapeMismatch, "labels do not match explicands");
  }
  const Index n = explicands.rows();
  std::vector<std::vector<Index>> orders(n);
  AblationCurve curve;
  curve.sign = sign;
  for (Index r = 0; r < n; ++r) {
    orders[r] = ablation_order(phi.row(r).transpose(), sign);
    curve.eligible.push_back(static_cast<Index>(orders[r].size()));
  }
  Matrix current = explicands;
  for (Index k = 0; k <= k_max; ++k) {
    if (k > 0) {
      for (Index r = 0; r < n; ++r) {
        if (k <= curve.eligible[r]) {
          const Index j = orders[r][k - 1];
          current(r, j) = impute(j);
        }
      }
    }
    double acc = 0.0;
    for (Index r = 0; r < n; ++r) {
      const std::optional<double> label = labels.empty() ? std::nullopt : labels[r];
      acc += predict_scalar(p, current.row(r).transpose(), label);
    }
    curve.mean_output.push_back(acc / static_cast<double>(n));
  }
  return curve;
}

std::string to_csv(const AblationCurve& curve) {
  std::string out = "k,mean_output,sign\n";
  for (std::size_t k = 0; k < curve.mean_output.size(); ++k) {
    out += std::to_string(k) + "," + format_double(curve.mean_output[k]) + "," + std::string(to_string(curve.sign)) +
           "\n";
  }
  return out;
}

}  // namespace seriesshap

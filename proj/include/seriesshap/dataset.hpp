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

#include <string>
#include <unordered_map>
#include <vector>

#include "seriesshap/model_ir.hpp"

namespace seriesshap {

/// Row-major numeric table with optional sample identifiers.
///
/// The first CSV column is treated as an identifier column when its header is
/// `id`/`sample_id` or when any of its cells is non-numeric; otherwise rows
/// are named by their zero-based position.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<std::string> ids, std::vector<std::string> columns, Matrix values);

  Index rows() const { return values_.rows(); }
  Index cols() const { return values_.cols(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<std::string>& columns() const { return columns_; }
  const Matrix& values() const { return values_; }

  Vector row(Index r) const { return values_.row(r).transpose(); }
  Index row_index(const std::string& id) const;  // throws kUnknownSample
  bool has_id(const std::string& id) const { return index_.count(id) != 0; }
  Index column_index(const std::string& name) const;  // throws kInvalidArgument

  /// Projection onto the named columns, in the given order.
  Dataset select_columns(const std::vector<std::string>& names) const;
  Dataset select_rows(const std::vector<Index>& rows) const;
  Dataset drop_column(const std::string& name) const;

 private:
  std::vector<std::string> ids_;
  std::vector<std::string> columns_;
  Matrix values_;
  std::unordered_map<std::string, Index> index_;
};

Dataset parse_csv(const std::string& text, const std::string& source = "<csv>");
Dataset load_csv(const std::string& path);
std::string to_csv(const Dataset& d);

}  // namespace seriesshap

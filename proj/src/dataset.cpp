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

#include "seriesshap/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>

#include "seriesshap/format.hpp"

namespace seriesshap {

Dataset::Dataset(std::vector<std::string> ids, std::vector<std::string> columns, Matrix values)
    : ids_(std::move(ids)), columns_(std::move(columns)), values_(std::move(values)) {
  if (static_cast<Index>(ids_.size()) != values_.rows()) {
    fail(ErrorCode::kShapeMismatch, std::to_string(ids_.size()) + " ids for " + std::to_string(values_.rows()) + " rows");
  }
  if (static_cast<Index>(columns_.size()) != values_.cols()) {
    fail(ErrorCode::kShapeMismatch,
         std::to_string(columns_.size()) + " column names for " + std::to_string(values_.cols()) + " columns");
  }
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], static_cast<Index>(i)).second) {
      fail(ErrorCode::kParse, "duplicate sample id '" + ids_[i] + "'");
    }
  }
}

Index Dataset::row_index(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) fail(ErrorCode::kUnknownSample, "'" + id + "'");
  return it->second;
}

Index Dataset::column_index(const std::string& name) const {
  auto it = std::find(columns_.begin(), columns_.end(), name);
  if (it == columns_.end()) fail(ErrorCode::kInvalidArgument, "no column named '" + name + "'");
  return static_cast<Index>(it - columns_.begin());
}

Dataset Dataset::select_columns(const std::vector<std::string>& names) const {
  Matrix out(rows(), static_cast<Index>(names.size()));
  for (std::size_t c = 0; c < names.size(); ++c) out.col(c) = values_.col(column_index(names[c]));
  return Dataset(ids_, names, std::move(out));
}

Dataset Dataset::select_rows(const std::vector<Index>& rows) const {
  Matrix out(static_cast<Index>(rows.size()), cols());
  std::vector<std::string> ids;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] < 0 || rows[r] >= this->rows()) fail(ErrorCode::kIndexOutOfRange, "row " + std::to_string(rows[r]));
    out.row(r) = values_.row(rows[r]);
    ids.push_back(ids_[rows[r]]);
  }
  return Dataset(std::move(ids), columns_, std::move(out));
}

Dataset Dataset::drop_column(const std::string& name) const {
  std::vector<std::string> keep;
  for (const auto& c : columns_) {
    if (c != name) keep.push_back(c);
  }
  if (keep.size() == columns_.size()) fail(ErrorCode::kInvalidArgument, "no column named '" + name + "'");
  return select_columns(keep);
}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string out(s.substr(b, e - b));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::optional<double> parse_number(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = cell.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
  return v;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

Dataset parse_csv(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  std::vector<std::string> header;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto cells = split(line);
    if (header.empty()) {
      header = std::move(cells);
      continue;
    }
    if (cells.size() != header.size()) {
      fail(ErrorCode::kParse, source + ":" + std::to_string(line_no) + ": row has " + std::to_string(cells.size()) +
                                  " fields, header has " + std::to_string(header.size()));
    }
    rows.emplace_back(line_no, std::move(cells));
  }
  if (header.empty()) fail(ErrorCode::kParse, source + ": missing header row");

  bool has_id = lower(header[0]) == "id" || lower(header[0]) == "sample_id";
  if (!has_id) {
    for (const auto& [_, cells] : rows) {
      if (!parse_number(cells[0])) {
        has_id = true;
        break;
      }
    }
  }
  const std::size_t first = has_id ? 1 : 0;
  std::vector<std::string> columns(header.begin() + first, header.end());
  Matrix values(static_cast<Index>(rows.size()), static_cast<Index>(columns.size()));
  std::vector<std::string> ids;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& [ln, cells] = rows[r];
    ids.push_back(has_id ? cells[0] : std::to_string(r));
    for (std::size_t c = first; c < cells.size(); ++c) {
      auto v = parse_number(cells[c]);
      if (!v || !std::isfinite(*v)) {
        fail(ErrorCode::kParse, source + ":" + std::to_string(ln) + ": column '" + header[c] +
                                    "' has non-numeric value '" + cells[c] + "'");
      }
      values(static_cast<Index>(r), static_cast<Index>(c - first)) = *v;
    }
  }
  try {
    return Dataset(std::move(ids), std::move(columns), std::move(values));
  } catch (const Error& e) {
    fail(e.code(), source + ": " + e.detail());
  }
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path);
}

std::string to_csv(const Dataset& d) {
  std::string out = "id";
  for (const auto& c : d.columns()) out += "," + c;
  out += "\n";
  for (Index r = 0; r < d.rows(); ++r) {
    out += d.ids()[r];
    for (Index c = 0; c < d.cols(); ++c) out += "," + format_double(d.values()(r, c));
    out += "\n";
  }
  return out;
}

}  // namespace seriesshap

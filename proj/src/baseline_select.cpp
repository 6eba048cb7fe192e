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

#include "seriesshap/baseline_select.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <limits>
#include <numeric>

#include "seriesshap/format.hpp"

namespace seriesshap {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// BaselineSet

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorCode::kIo, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string id_set_hash(const std::vector<std::string>& sample_ids) {
  std::string canon = "ids:" + std::to_string(sample_ids.size()) + "\n";
  for (const auto& id : sample_ids) canon += std::to_string(id.size()) + ":" + id + "\n";
  return sha256_hex(canon);
}

BaselineSet::BaselineSet(Matrix samples, std::vector<std::string> sample_ids)
    : samples_(std::move(samples)), sample_ids_(std::move(sample_ids)) {
  if (samples_.rows() == 0) fail(ErrorCode::kEmptyBaselineSet, "baseline set has no samples");
  if (!samples_.allFinite()) fail(ErrorCode::kNonFinite, "baseline samples");
  if (sample_ids_.empty()) {
    for (Index i = 0; i < samples_.rows(); ++i) sample_ids_.push_back(std::to_string(i));
  }
  if (static_cast<Index>(sample_ids_.size()) != samples_.rows()) {
    fail(ErrorCode::kShapeMismatch, std::to_string(sample_ids_.size()) + " ids for " +
                                        std::to_string(samples_.rows()) + " baselines");
  }
  std::string canon = "baselines:" + std::to_string(samples_.rows()) + "x" + std::to_string(samples_.cols()) + "\n";
  for (Index r = 0; r < samples_.rows(); ++r) {
    canon += std::to_string(sample_ids_[r].size()) + ":" + sample_ids_[r];
    for (Index c = 0; c < samples_.cols(); ++c) canon += "," + format_double(samples_(r, c));
    canon += "\n";
  }
  id_ = sha256_hex(canon);
}

// ---------------------------------------------------------------------------
// Random helpers

std::uint64_t bounded_random(std::mt19937_64& rng, std::uint64_t n) {
  if (n == 0) fail(ErrorCode::kInvalidArgument, "bounded_random with n = 0");
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = max - (max % n + 1) % n;
  std::uint64_t r;
  do {
    r = rng();
  } while (r > limit);
  return r % n;
}

double unit_random(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

BaselineSet uniform_sample(const Dataset& data, Index n, std::uint64_t seed) {
  if (n < 1 || n > data.rows()) {
    fail(ErrorCode::kOutOfRange, "uniform sample size " + std::to_string(n) + " outside [1," +
                                     std::to_string(data.rows()) + "]");
  }
  std::mt19937_64 rng(seed);
  std::vector<Index> order(static_cast<std::size_t>(data.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  for (Index i = 0; i < n; ++i) {
    const Index j = i + static_cast<Index>(bounded_random(rng, static_cast<std::uint64_t>(data.rows() - i)));
    std::swap(order[i], order[j]);
  }
  order.resize(static_cast<std::size_t>(n));
  const Dataset picked = data.select_rows(order);
  BaselineSet set(picked.values(), picked.ids());
  set.uniform = UniformProvenance{seed, n};
  return set;
}

// ---------------------------------------------------------------------------
// k-means

namespace {

struct Assignment {
  std::vector<Index> labels;
  std::vector<double> dist2;
  double objective = 0.0;
};

Assignment assign_all(const Matrix& data, const Matrix& centroids) {
  Assignment a;
  a.labels.resize(data.rows());
  a.dist2.resize(data.rows());
  for (Index i = 0; i < data.rows(); ++i) {
    Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Index c = 0; c < centroids.rows(); ++c) {
      const double d = (data.row(i) - centroids.row(c)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    a.labels[i] = best;
    a.dist2[i] = best_d;
  }
  // Fixed-order accumulation.
  for (double d : a.dist2) a.objective += d;
  return a;
}

Matrix seed_plus_plus(const Matrix& data, Index k, std::mt19937_64& rng) {
  const Index n = data.rows();
  Matrix centroids(k, data.cols());
  std::vector<char> chosen(n, 0);
  Index first = static_cast<Index>(bounded_random(rng, static_cast<std::uint64_t>(n)));
  centroids.row(0) = data.row(first);
  chosen[first] = 1;
  std::vector<double> d2(n);
  for (Index i = 0; i < n; ++i) d2[i] = (data.row(i) - centroids.row(0)).squaredNorm();
  for (Index c = 1; c < k; ++c) {
    double total = 0.0;
    for (double d : d2) total += d;
    Index pick = -1;
    if (total > 0.0) {
      const double target = unit_random(rng) * total;
      double acc = 0.0;
      for (Index i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        acc += d2[i];
        pick = i;
        if (acc > target) break;
      }
    } else {
      for (Index i = 0; i < n; ++i) {
        if (!chosen[i]) {
          pick = i;
          break;
        }
      }
    }
    centroids.row(c) = data.row(pick);
    chosen[pick] = 1;
    for (Index i = 0; i < n; ++i) d2[i] = std::min(d2[i], (data.row(i) - centroids.row(c)).squaredNorm());
  }
  return centroids;
}

}  // namespace

ClusterModel kmeans_fit(const Matrix& data, const KMeansOptions& options, std::vector<std::string> reduced_features) {
  if (data.cols() == 0) fail(ErrorCode::kInvalidArgument, "k-means needs at least one reduced feature");
  if (options.k < 1 || options.k > data.rows()) {
    fail(ErrorCode::kOutOfRange, "k = " + std::to_string(options.k) + " outside [1," + std::to_string(data.rows()) + "]");
  }
  if (!data.allFinite()) fail(ErrorCode::kNonFinite, "k-means data");
  if (!reduced_features.empty() && static_cast<Index>(reduced_features.size()) != data.cols()) {
    fail(ErrorCode::kWidthMismatch, "reduced feature names do not match the data width");
  }
  std::mt19937_64 rng(options.seed);
  ClusterModel model;
  model.reduced_features = std::move(reduced_features);
  model.centroids = seed_plus_plus(data, options.k, rng);
  Assignment a = assign_all(data, model.centroids);
  model.objective_history.push_back(a.objective);

  for (int it = 0; it < options.max_iter; ++it) {
    Matrix next = Matrix::Zero(options.k, data.cols());
    std::vector<Index> counts(options.k, 0);
    for (Index i = 0; i < data.rows(); ++i) {
      next.row(a.labels[i]) += data.row(i);
      ++counts[a.labels[i]];
    }
    std::vector<char> reseeded(data.rows(), 0);
    for (Index c = 0; c < options.k; ++c) {
      if (counts[c] > 0) {
        next.row(c) /= static_cast<double>(counts[c]);
        continue;
      }
      Index far = -1;
      for (Index i = 0; i < data.rows(); ++i) {
        if (reseeded[i]) continue;
        if (far < 0 || a.dist2[i] > a.dist2[far]) far = i;
      }
      reseeded[far] = 1;
      next.row(c) = data.row(far);
    }
    double movement = 0.0;
    for (Index c = 0; c < options.k; ++c) movement = std::max(movement, (next.row(c) - model.centroids.row(c)).norm());
    model.centroids = std::move(next);
    a = assign_all(data, model.centroids);
    model.objective_history.push_back(a.objective);
    model.iterations = it + 1;
    const double prev = model.objective_history[model.objective_history.size() - 2];
    if (a.objective > prev * (1.0 + 1e-12) + 1e-300) {
      fail(ErrorCode::kInvalidModel, "k-means objective increased from " + format_double(prev) + " to " +
                                         format_double(a.objective) + " at iteration " + std::to_string(it + 1));
    }
    if (movement < options.tol) {
      model.converged = true;
      break;
    }
  }
  model.assignments = std::move(a.labels);
  model.objective = a.objective;
  return model;
}

Index assign_baseline_cluster(const ClusterModel& model, const Vector& x) {
  if (x.size() != model.centroids.cols()) {
    fail(ErrorCode::kWidthMismatch, "explicand reduced width " + std::to_string(x.size()) + " vs " +
                                        std::to_string(model.centroids.cols()));
  }
  Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Index c = 0; c < model.k(); ++c) {
    const double d = (x.transpose() - model.centroids.row(c)).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

BaselineSet cluster_baselines(const ClusterModel& model, const Dataset& data, Index cluster) {
  if (cluster < 0 || cluster >= model.k()) fail(ErrorCode::kIndexOutOfRange, "cluster " + std::to_string(cluster));
  if (static_cast<Index>(model.assignments.size()) != data.rows()) {
    fail(ErrorCode::kShapeMismatch, "cluster model was fit on " + std::to_string(model.assignments.size()) +
                                        " rows, dataset has " + std::to_string(data.rows()));
  }
  std::vector<Index> rows;
  for (Index i = 0; i < data.rows(); ++i) {
    if (model.assignments[i] == cluster) rows.push_back(i);
  }
  if (rows.empty()) fail(ErrorCode::kEmptyBaselineSet, "cluster " + std::to_string(cluster) + " has no members");
  const Dataset picked = data.select_rows(rows);
  BaselineSet set(picked.values(), picked.ids());
  set.cluster = ClusterProvenance{cluster, model.centroids.row(cluster).transpose()};
  return set;
}

json to_json(const ClusterModel& m) {
  json centroids = json::array();
  for (Index c = 0; c < m.k(); ++c) {
    json row = json::array();
    for (Index j = 0; j < m.centroids.cols(); ++j) row.push_back(m.centroids(c, j));
    centroids.push_back(row);
  }
  json out;
  out["reduced_features"] = m.reduced_features;
  out["centroids"] = centroids;
  out["assignments"] = m.assignments;
  out["objective"] = m.objective;
  out["objective_history"] = m.objective_history;
  out["iterations"] = m.iterations;
  out["converged"] = m.converged;
  return out;
}

ClusterModel cluster_model_from_json(const json& doc) {
  try {
    ClusterModel m;
    m.reduced_features = doc.at("reduced_features").get<std::vector<std::string>>();
    const json& cs = doc.at("centroids");
    const Index k = static_cast<Index>(cs.size());
    const Index r = k > 0 ? static_cast<Index>(cs[0].size()) : 0;
    m.centroids.resize(k, r);
    for (Index c = 0; c < k; ++c) {
      if (static_cast<Index>(cs[c].size()) != r) fail(ErrorCode::kParse, "cluster model: ragged centroids");
      for (Index j = 0; j < r; ++j) m.centroids(c, j) = cs[c][j].get<double>();
    }
    m.assignments = doc.at("assignments").get<std::vector<Index>>();
    m.objective = doc.at("objective").get<double>();
    if (doc.contains("objective_history")) m.objective_history = doc["objective_history"].get<std::vector<double>>();
    if (doc.contains("iterations")) m.iterations = doc["iterations"].get<int>();
    if (doc.contains("converged")) m.converged = doc["converged"].get<bool>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("cluster model: ") + e.what());
  }
}

}  // namespace seriesshap

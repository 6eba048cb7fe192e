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

#include "seriesshap/distributed/coordinator.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <thread>

#include "seriesshap/baseline_set.hpp"
#include "seriesshap/numeric.hpp"

namespace seriesshap::distributed {

bool CoordinationResult::partial() const {
  return std::any_of(outcomes.begin(), outcomes.end(), [](const ExplicandOutcome& o) { return !o.ok; });
}

Coordinator::Coordinator(Pipeline meta, Dataset data, std::vector<NodeDescriptor> registry, Transport& transport)
    : meta_(std::move(meta)), registry_(std::move(registry)), transport_(transport) {
  if (meta_.output_width() != 1) fail(ErrorCode::kInvalidModel, "meta pipeline must have a single output");
  const auto& names = meta_.feature_names();
  if (names.empty()) fail(ErrorCode::kInvalidModel, "meta pipeline needs feature names to match scores");
  data_ = data.select_columns(names);

  std::set<std::string> node_features;
  for (const auto& d : registry_) node_features.insert(d.features.begin(), d.features.end());
  std::set<const NodeDescriptor*> expanded;
  for (const auto& name : names) {
    Input in;
    for (const auto& d : registry_) {
      if (std::find(d.scores.begin(), d.scores.end(), name) != d.scores.end()) in.node = &d;
    }
    in.is_score = in.node != nullptr;
    if (in.is_score) {
      if (expanded.insert(in.node).second) {
        for (const auto& f : in.node->features) {
          raw_index_[f] = static_cast<Index>(raw_names_.size());
          raw_names_.push_back(f);
        }
      }
    } else {
      if (node_features.count(name)) {
        fail(ErrorCode::kInvalidArgument, "feature '" + name + "' is both a meta input and a node feature");
      }
      in.raw_slot = static_cast<Index>(raw_names_.size());
      raw_index_[name] = in.raw_slot;
      raw_names_.push_back(name);
    }
    inputs_.push_back(in);
  }
}

Coordinator::PairResult Coordinator::pair(const std::string& set_id, const std::string& explicand,
                                          const std::string& baseline, const Vector& xe, const Vector& xb,
                                          std::optional<double> label) const {
  ChainOptions chain;
  chain.label = label;
  const ChainTrace meta = chain_single_baseline(meta_, xe, xb, chain);
  const Vector& psi = meta.attributions();

  PairResult out;
  out.meta = psi;
  out.raw = Vector::Zero(static_cast<Index>(raw_names_.size()));
  out.degenerate = meta.degenerate_divisions;
  const auto& names = meta_.feature_names();
  for (std::size_t j = 0; j < inputs_.size(); ++j) {
    const Input& in = inputs_[j];
    const Index jj = static_cast<Index>(j);
    if (!in.is_score) {
      out.raw(in.raw_slot) += psi(jj);
      continue;
    }
    ScoreAttributionRequest req{kProtocolVersion, set_id, explicand, baseline, names[j], psi(jj)};
    const Message reply = decode_message(transport_.exchange(*in.node, encode_message(req)));
    if (const auto* err = std::get_if<ErrorReply>(&reply)) {
      fail(code_from_wire(err->code), "node '" + in.node->id + "': " + err->message);
    }
    const auto* resp = std::get_if<ScoreAttributionResponse>(&reply);
    if (!resp) fail(ErrorCode::kRejectedResponse, "node '" + in.node->id + "' answered with a request");
    if (resp->baseline_set != set_id || resp->explicand != explicand || resp->baseline != baseline ||
        resp->score != names[j]) {
      fail(ErrorCode::kRejectedResponse, "node '" + in.node->id + "' answered a different request");
    }
    const double delta = xe(jj) - xb(jj);
    const double audit_scale = std::max({std::abs(delta), std::abs(resp->score_delta), 1e-300});
    if (std::abs(resp->score_delta - delta) > kBoundaryTolerance * audit_scale) {
      fail(ErrorCode::kRejectedResponse, "node '" + in.node->id + "' reports score delta " +
                                             std::to_string(resp->score_delta) + " for '" + names[j] +
                                             "', expected " + std::to_string(delta));
    }
    Vector values(static_cast<Index>(resp->attrs.size()));
    std::set<std::string> seen;
    for (std::size_t i = 0; i < resp->attrs.size(); ++i) {
      const auto& [feature, value] = resp->attrs[i];
      if (std::find(in.node->features.begin(), in.node->features.end(), feature) == in.node->features.end() ||
          !seen.insert(feature).second) {
        fail(ErrorCode::kRejectedResponse, "node '" + in.node->id + "' attributed to feature '" + feature + "'");
      }
      values(static_cast<Index>(i)) = value;
    }
    if (values.size() == 0 ? req.value != 0.0 : efficiency_error(values, req.value) > kBoundaryTolerance) {
      fail(ErrorCode::kRejectedResponse, "node '" + in.node->id + "' response for '" + names[j] +
                                             "' does not sum to the requested value");
    }
    for (std::size_t i = 0; i < resp->attrs.size(); ++i) {
      out.raw(raw_index_.at(resp->attrs[i].first)) += values(static_cast<Index>(i));
    }
  }
  return out;
}

ExplicandOutcome Coordinator::explain(const std::string& explicand_id, const std::vector<std::string>& baseline_ids,
                                      const CoordinateOptions& options, std::optional<double> label) const {
  if (baseline_ids.empty()) fail(ErrorCode::kEmptyBaselineSet, "no baselines to coordinate over");
  const std::string set_id = id_set_hash(baseline_ids);
  const Vector xe = data_.row(data_.row_index(explicand_id));
  std::vector<Vector> xbs;
  for (const auto& b : baseline_ids) xbs.push_back(data_.row(data_.row_index(b)));

  const std::size_t n = baseline_ids.size();
  std::vector<PairResult> results(n);
  std::vector<double> outputs(n);
  auto run = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      results[i] = pair(set_id, explicand_id, baseline_ids[i], xe, xbs[i], label);
      outputs[i] = predict_scalar(meta_, xbs[i], label);
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(options.workers, 1)), 1, n);
  if (workers == 1) {
    run(0, n);
  } else {
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t lo = n * w / workers, hi = n * (w + 1) / workers;
      threads.emplace_back([&, w, lo, hi] {
        try {
          run(lo, hi);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::vector<Vector> raws, metas;
  long degenerate = 0;
  for (auto& r : results) {
    raws.push_back(std::move(r.raw));
    metas.push_back(std::move(r.meta));
    degenerate += r.degenerate;
  }
  ExplicandOutcome out;
  out.explicand_id = explicand_id;
  out.ok = true;
  for (AttributionReport* rep : {&out.raw, &out.scores}) {
    rep->explicand_id = explicand_id;
    rep->expected_value = pairwise_mean(std::span<const double>(outputs));
    rep->prediction = predict_scalar(meta_, xe, label);
    rep->baseline_set_id = set_id;
    rep->flags.degenerate_divisions = degenerate;
  }
  out.raw.feature_names = raw_names_;
  out.raw.attributions = pairwise_mean(std::span<const Vector>(raws));
  out.scores.feature_names = meta_.feature_names();
  out.scores.attributions = pairwise_mean(std::span<const Vector>(metas));
  const double target = out.raw.prediction - out.raw.expected_value;
  if (efficiency_error(out.raw.attributions, out.raw.prediction, out.raw.expected_value) > kChainEfficiencyTolerance) {
    fail(ErrorCode::kEfficiency, "coordinated attributions for '" + explicand_id + "' do not sum to " +
                                     std::to_string(target));
  }
  return out;
}

CoordinationResult Coordinator::coordinate(const std::vector<std::string>& explicand_ids,
                                           const std::vector<std::string>& baseline_ids,
                                           const CoordinateOptions& options,
                                           const std::vector<std::optional<double>>& labels) const {
  if (baseline_ids.empty()) fail(ErrorCode::kEmptyBaselineSet, "no baselines to coordinate over");
  if (!labels.empty() && labels.size() != explicand_ids.size()) {
    fail(ErrorCode::kShapeMismatch, "labels do not match explicands");
  }
  CoordinationResult result;
  for (std::size_t i = 0; i < explicand_ids.size(); ++i) {
    const std::optional<double> label = labels.empty() ? std::nullopt : labels[i];
    try {
      result.outcomes.push_back(explain(explicand_ids[i], baseline_ids, options, label));
    } catch (const Error& e) {
      ExplicandOutcome failed;
      failed.explicand_id = explicand_ids[i];
      failed.error = e.what();
      for (AttributionReport* rep : {&failed.raw, &failed.scores}) {
        rep->explicand_id = explicand_ids[i];
        rep->flags.notes.push_back("failed: " + failed.error);
      }
      result.outcomes.push_back(std::move(failed));
    }
  }
  return result;
}

}  // namespace seriesshap::distributed

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

#include "seriesshap/chain_engine.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "seriesshap/format.hpp"
#include "seriesshap/numeric.hpp"
#include "seriesshap/stage_attributors.hpp"

namespace seriesshap {

using json = nlohmann::ordered_json;

namespace {

std::atomic<unsigned long> g_chain_counter{0};

bool should_check(EfficiencyCheck check) {
  switch (check) {
    case EfficiencyCheck::kAlways: return true;
    case EfficiencyCheck::kOff: return false;
    case EfficiencyCheck::kSampled:
      return g_chain_counter.fetch_add(1, std::memory_order_relaxed) % kEfficiencySampleEvery == 0;
  }
  return true;
}

}  // namespace

ChainTrace propagate(const Pipeline& p, const ForwardTrace& te, const ForwardTrace& tb, const Vector& seed,
                     std::optional<double> label, EfficiencyCheck check, double tolerance) {
  const std::size_t k = p.size();
  if (te.values.size() != k + 1 || tb.values.size() != k + 1) {
    fail(ErrorCode::kShapeMismatch, "forward traces do not match the pipeline length");
  }
  if (seed.size() != p.output_width()) {
    fail(ErrorCode::kWidthMismatch, "seed width " + std::to_string(seed.size()) + " for output width " +
                                        std::to_string(p.output_width()));
  }
  const bool checking = should_check(check);

  ChainTrace trace;
  trace.psi.resize(k);
  trace.output_deltas.resize(k);
  for (std::size_t i = 0; i < k; ++i) trace.output_deltas[i] = te.values[i + 1] - tb.values[i + 1];
  trace.final_delta = seed.dot(trace.output_deltas.back());

  Vector upstream = seed;
  for (std::size_t s = k; s-- > 0;) {
    const Stage& stage = p.stages()[s];
    StageAttribution phi = stage_attr(stage, te.values[s], tb.values[s], label);
    trace.degenerate_divisions += phi.degenerate_divisions;
    if (s + 1 == k) {
      trace.psi[s] = phi.matrix * upstream;
    } else {
      const Vector& delta = trace.output_deltas[s];
      for (Index o = 0; o < delta.size(); ++o) {
        if (delta(o) != 0.0) continue;
        ++trace.degenerate_divisions;
        if (upstream(o) != 0.0) {
          fail(ErrorCode::kEfficiency, "stage " + std::to_string(s + 1) + " carries attribution " +
                                           format_double(upstream(o)) + " on input " + std::to_string(o) +
                                           " whose delta is 0");
        }
      }
      trace.psi[s] = phi.matrix * hadamard_div(upstream, delta);
    }
    if (checking) {
      const double err = efficiency_error(trace.psi[s], trace.final_delta);
      if (!(err <= tolerance)) {
        fail(ErrorCode::kEfficiency, "psi at stage " + std::to_string(s) + " sums to " +
                                         format_double(trace.psi[s].sum()) + ", expected " +
                                         format_double(trace.final_delta) + " (relative error " +
                                         format_double(err) + ")");
      }
    }
    upstream = trace.psi[s];
  }
  return trace;
}

ChainTrace chain_single_baseline(const Pipeline& p, const Vector& xe, const Vector& xb,
                                 const ChainOptions& options) {
  if (p.output_width() != 1) {
    fail(ErrorCode::kWidthMismatch, "attribution needs a single-output pipeline (append a select transform)");
  }
  if (xe.size() != xb.size()) {
    fail(ErrorCode::kWidthMismatch, "explicand width " + std::to_string(xe.size()) + " vs baseline width " +
                                        std::to_string(xb.size()));
  }
  const ForwardTrace te = evaluate(p, xe, options.label);
  const ForwardTrace tb = evaluate(p, xb, options.label);
  return propagate(p, te, tb, Vector::Ones(1), options.label, options.check, options.tolerance);
}

AttributionReport chain_with_distribution(const Pipeline& p, const Vector& xe, const BaselineSet& baselines,
                                          const DistributionOptions& options, std::string explicand_id) {
  const Index n = baselines.size();
  if (n == 0) fail(ErrorCode::kEmptyBaselineSet, "chain_with_distribution");
  if (baselines.width() != xe.size()) {
    fail(ErrorCode::kWidthMismatch, "baseline width " + std::to_string(baselines.width()) + " vs explicand width " +
                                        std::to_string(xe.size()));
  }
  std::vector<ChainTrace> chains(static_cast<std::size_t>(n));
  std::vector<double> baseline_outputs(static_cast<std::size_t>(n));

  auto run_range = [&](Index begin, Index end) {
    for (Index b = begin; b < end; ++b) {
      const Vector xb = baselines.sample(b);
      chains[b] = chain_single_baseline(p, xe, xb, options.chain);
      baseline_outputs[b] = predict_scalar(p, xb, options.chain.label);
    }
  };
  const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(n)));
  if (workers == 1) {
    run_range(0, n);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    const Index chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const Index begin = w * chunk;
      const Index end = std::min(n, begin + chunk);
      pool.emplace_back([&, w, begin, end] {
        try {
          run_range(begin, end);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::vector<Vector> psi1;
  psi1.reserve(chains.size());
  AttributionReport report;
  for (const auto& c : chains) {
    psi1.push_back(c.attributions());
    report.flags.degenerate_divisions += c.degenerate_divisions;
  }
  report.explicand_id = std::move(explicand_id);
  report.feature_names = p.feature_names();
  report.attributions = pairwise_mean(std::span<const Vector>(psi1));
  report.expected_value = pairwise_mean(std::span<const double>(baseline_outputs));
  report.prediction = predict_scalar(p, xe, options.chain.label);
  report.baseline_set_id = baselines.id();
  if (options.retain_traces) report.traces = std::move(chains);

  const double err = efficiency_error(report.attributions, report.prediction, report.expected_value);
  if (!(err <= kChainEfficiencyTolerance)) {
    fail(ErrorCode::kEfficiency, "report attributions sum to " + format_double(report.attributions.sum()) +
                                     ", expected " + format_double(report.prediction - report.expected_value));
  }
  return report;
}

AttributionReport ensemble_attr(const std::vector<std::pair<double, AttributionReport>>& members) {
  if (members.empty()) fail(ErrorCode::kInvalidArgument, "ensemble_attr needs at least one member");
  const AttributionReport& first = members.front().second;
  AttributionReport out;
  out.explicand_id = first.explicand_id;
  out.feature_names = first.feature_names;
  out.baseline_set_id = first.baseline_set_id;
  out.attributions = Vector::Zero(first.attributions.size());
  for (const auto& [w, r] : members) {
    if (r.explicand_id != first.explicand_id || r.baseline_set_id != first.baseline_set_id) {
      fail(ErrorCode::kMismatchedReports, "ensemble members disagree on explicand or baseline set");
    }
    if (r.attributions.size() != first.attributions.size() || r.feature_names != first.feature_names) {
      fail(ErrorCode::kMismatchedReports, "ensemble members disagree on the feature space");
    }
    out.attributions += w * r.attributions;
    out.expected_value += w * r.expected_value;
    out.prediction += w * r.prediction;
    out.flags.degenerate_divisions += r.flags.degenerate_divisions;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::string feature_label(const AttributionReport& r, Index i) {
  if (!r.feature_names.empty()) return r.feature_names[i];
  return "x" + std::to_string(i);
}

}  // namespace

json to_json(const AttributionReport& r) {
  json attrs = json::array();
  for (Index i = 0; i < r.attributions.size(); ++i) {
    attrs.push_back({{"feature", feature_label(r, i)}, {"value", r.attributions(i)}});
  }
  json flags;
  flags["degenerate_divisions"] = r.flags.degenerate_divisions;
  flags["notes"] = r.flags.notes;
  json out;
  out["explicand_id"] = r.explicand_id;
  out["attributions"] = attrs;
  out["expected_value"] = r.expected_value;
  out["baseline_set_id"] = r.baseline_set_id;
  out["flags"] = flags;
  return out;
}

AttributionReport report_from_json(const json& doc) {
  try {
    AttributionReport r;
    r.explicand_id = doc.at("explicand_id").get<std::string>();
    const json& attrs = doc.at("attributions");
    r.attributions.resize(static_cast<Index>(attrs.size()));
    for (std::size_t i = 0; i < attrs.size(); ++i) {
      r.feature_names.push_back(attrs[i].at("feature").get<std::string>());
      r.attributions(static_cast<Index>(i)) = attrs[i].at("value").get<double>();
    }
    r.expected_value = doc.at("expected_value").get<double>();
    r.prediction = r.expected_value + r.attributions.sum();
    r.baseline_set_id = doc.at("baseline_set_id").get<std::string>();
    if (doc.contains("flags")) {
      const json& f = doc["flags"];
      if (f.contains("degenerate_divisions")) r.flags.degenerate_divisions = f["degenerate_divisions"].get<long>();
      if (f.contains("notes")) r.flags.notes = f["notes"].get<std::vector<std::string>>();
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("attribution report: ") + e.what());
  }
}

std::string reports_to_csv(const std::vector<AttributionReport>& reports) {
  std::string out = "explicand_id";
  if (!reports.empty()) {
    for (Index i = 0; i < reports.front().attributions.size(); ++i) out += "," + feature_label(reports.front(), i);
  }
  out += ",expected_value\n";
  for (const auto& r : reports) {
    out += r.explicand_id;
    for (Index i = 0; i < r.attributions.size(); ++i) out += "," + format_double(r.attributions(i));
    out += "," + format_double(r.expected_value) + "\n";
  }
  return out;
}

}  // namespace seriesshap

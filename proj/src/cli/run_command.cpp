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

#include "seriesshap/cli.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "seriesshap/ablation.hpp"
#include "seriesshap/baseline_select.hpp"
#include "seriesshap/chain_engine.hpp"
#include "seriesshap/dataset.hpp"
#include "seriesshap/distributed/coordinator.hpp"
#include "seriesshap/format.hpp"
#include "seriesshap/grouping.hpp"
#include "seriesshap/numeric.hpp"
#include "seriesshap/shapley_oracle.hpp"

namespace seriesshap::cli {

using json = nlohmann::ordered_json;

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

struct Config {
  std::string pipeline;
  std::string data;
  std::string baseline_data;
  std::vector<std::string> explicands;
  std::vector<std::string> baseline_ids;
  Index uniform = 0;
  std::uint64_t seed = 0;
  Index kmeans = 0;
  std::vector<std::string> reduced_features;
  std::string cluster_model;
  int max_iter = 300;
  double tol = 1e-6;
  std::string output;
  std::string format = "json";
  std::string as = "logodds";
  std::string labels;
  std::string groups;
  std::string input;
  std::string attributions;
  std::string sign = "pos";
  Index kmax = -1;
  int workers = 1;
  int port = 0;
  std::string host = "127.0.0.1";
  std::string registry;
  std::string score;
  std::string node_id;
  bool no_raw = false;
  bool no_scores = false;
  bool traces = false;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kParse, path + ": " + e.what());
  }
}

void emit(const Config& c, std::ostream& out, const std::string& text) {
  if (c.output.empty() || c.output == "-") {
    out << text;
    return;
  }
  std::ofstream f(c.output, std::ios::binary);
  if (!f) fail(ErrorCode::kIo, "cannot write " + c.output);
  f << text;
}

Pipeline with_output_transform(Pipeline p, const std::string& as) {
  if (as == "logodds") return p;
  if (as == "probability") return p.then(Stage::transform(TransformKind::kSigmoid));
  return p.then(Stage::transform(TransformKind::kSigmoid)).then(Stage::transform(TransformKind::kBceLoss));
}

// Pipeline plus the feature columns it reads and the optional label column.
struct Model {
  Pipeline pipeline;
  Dataset features;
  std::vector<std::optional<double>> labels;  // by row of `features`
  std::vector<std::string> feature_names;

  std::optional<double> label_of(const std::string& id) const {
    if (labels.empty()) return std::nullopt;
    return labels[static_cast<std::size_t>(features.row_index(id))];
  }
};

Dataset feature_view(const Dataset& data, const Pipeline& p, const std::string& label_col) {
  if (!p.feature_names().empty()) return data.select_columns(p.feature_names());
  Dataset d = label_col.empty() ? data : data.drop_column(label_col);
  if (d.cols() != p.input_width()) {
    fail(ErrorCode::kWidthMismatch, "pipeline reads " + std::to_string(p.input_width()) + " features, data has " +
                                        std::to_string(d.cols()) + " columns");
  }
  return d;
}

Model load_model(const Config& c) {
  Pipeline p = with_output_transform(load_pipeline_file(c.pipeline), c.as);
  const Dataset data = load_csv(c.data);
  Model m{p, feature_view(data, p, c.labels), {}, {}};
  if (!c.labels.empty()) {
    const Index col = data.column_index(c.labels);
    for (Index r = 0; r < data.rows(); ++r) m.labels.push_back(data.values()(r, col));
  } else if (p.needs_label()) {
    fail(ErrorCode::kMissingLabel, "--as loss needs --labels COL");
  }
  m.feature_names = m.features.columns();
  return m;
}

std::vector<std::string> explicand_ids(const Config& c, const Dataset& d) {
  if (c.explicands.empty()) return d.ids();
  for (const auto& id : c.explicands) d.row_index(id);
  return c.explicands;
}

// Resolves the baseline selector for one explicand.
class BaselineSource {
 public:
  BaselineSource(const Config& c, const Model& m) : config_(c) {
    pool_ = c.baseline_data.empty() ? m.features : feature_view(load_csv(c.baseline_data), m.pipeline, c.labels);
    if (!c.baseline_ids.empty()) {
      std::vector<Index> rows;
      for (const auto& id : c.baseline_ids) rows.push_back(pool_.row_index(id));
      const Dataset sel = pool_.select_rows(rows);
      fixed_.emplace(sel.values(), sel.ids());
    } else if (c.uniform > 0) {
      fixed_.emplace(uniform_sample(pool_, c.uniform, c.seed));
    } else if (c.kmeans > 0 || !c.cluster_model.empty()) {
      if (!c.cluster_model.empty()) {
        model_ = cluster_model_from_json(read_json(c.cluster_model));
      } else {
        if (c.reduced_features.empty()) fail(ErrorCode::kInvalidArgument, "--kmeans needs --reduced-features");
        KMeansOptions o;
        o.k = c.kmeans;
        o.seed = c.seed;
        o.max_iter = c.max_iter;
        o.tol = c.tol;
        model_ = kmeans_fit(pool_.select_columns(c.reduced_features).values(), o, c.reduced_features);
      }
      if (model_->assignments.size() != static_cast<std::size_t>(pool_.rows())) {
        fail(ErrorCode::kShapeMismatch, "cluster model was fitted on " + std::to_string(model_->assignments.size()) +
                                            " rows, baseline data has " + std::to_string(pool_.rows()));
      }
    } else {
      fail(ErrorCode::kInvalidArgument, "choose baselines with --baseline-ids, --uniform or --kmeans");
    }
  }

  const BaselineSet& for_explicand(const Dataset& features, const std::string& id) {
    if (fixed_) return *fixed_;
    const Vector x = features.select_columns(model_->reduced_features).row(features.row_index(id));
    const Index c = assign_baseline_cluster(*model_, x);
    auto it = by_cluster_.find(c);
    if (it == by_cluster_.end()) it = by_cluster_.emplace(c, cluster_baselines(*model_, pool_, c)).first;
    return it->second;
  }

  const Dataset& pool() const { return pool_; }

 private:
  const Config& config_;
  Dataset pool_;
  std::optional<BaselineSet> fixed_;
  std::optional<ClusterModel> model_;
  std::map<Index, BaselineSet> by_cluster_;
};

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

std::string reports_text(const std::vector<AttributionReport>& reports, const std::string& format) {
  if (format == "csv") return reports_to_csv(reports);
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  return dump(arr);
}

std::string groups_text(const std::vector<AttributionReport>& reports, const std::string& spec_path,
                        const std::string& format) {
  const json spec_doc = read_json(spec_path);
  std::vector<std::pair<const AttributionReport*, GroupAttribution>> rows;
  for (const auto& r : reports) {
    const GroupSpec spec = load_group_spec(spec_doc, r.feature_names);
    rows.emplace_back(&r, group_attr(r.attributions, spec));
  }
  if (format == "csv") {
    std::string out = "explicand_id";
    if (!rows.empty()) {
      for (const auto& n : rows.front().second.names) out += "," + n;
    }
    out += ",expected_value\n";
    for (const auto& [r, g] : rows) {
      out += r->explicand_id;
      for (Index i = 0; i < g.values.size(); ++i) out += "," + format_double(g.values(i));
      out += "," + format_double(r->expected_value) + "\n";
    }
    return out;
  }
  json arr = json::array();
  for (const auto& [r, g] : rows) {
    json groups = json::array();
    for (std::size_t i = 0; i < g.names.size(); ++i) {
      groups.push_back({{"group", g.names[i]}, {"value", g.values(static_cast<Index>(i))}});
    }
    json doc;
    doc["explicand_id"] = r->explicand_id;
    doc["groups"] = groups;
    doc["factor"] = g.factor;
    doc["rescaled"] = g.rescaled;
    doc["unnormalizable"] = g.unnormalizable;
    doc["expected_value"] = r->expected_value;
    doc["baseline_set_id"] = r->baseline_set_id;
    arr.push_back(doc);
  }
  return dump(arr);
}

std::vector<AttributionReport> read_reports(const std::string& path) {
  const json doc = read_json(path);
  if (!doc.is_array()) fail(ErrorCode::kParse, path + ": expected a list of attribution reports");
  std::vector<AttributionReport> out;
  for (const auto& r : doc) out.push_back(report_from_json(r));
  return out;
}

// Serialized form is what `groups` consumes, so the one-shot path goes
// through it as well.
std::vector<AttributionReport> round_trip(const std::vector<AttributionReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  std::vector<AttributionReport> out;
  for (const auto& r : json::parse(arr.dump())) out.push_back(report_from_json(r));
  return out;
}

int cmd_explain(const Config& c, std::ostream& out) {
  const Model m = load_model(c);
  BaselineSource baselines(c, m);
  DistributionOptions opts;
  opts.workers = c.workers;
  std::vector<AttributionReport> reports;
  for (const auto& id : explicand_ids(c, m.features)) {
    opts.chain.label = m.label_of(id);
    AttributionReport r =
        chain_with_distribution(m.pipeline, m.features.row(m.features.row_index(id)),
                                baselines.for_explicand(m.features, id), opts, id);
    r.feature_names = m.feature_names;
    reports.push_back(std::move(r));
  }
  if (!c.groups.empty()) {
    emit(c, out, groups_text(round_trip(reports), c.groups, c.format));
  } else {
    emit(c, out, reports_text(reports, c.format));
  }
  return 0;
}

int cmd_oracle(const Config& c, std::ostream& out) {
  const Model m = load_model(c);
  if (m.pipeline.input_width() > kMaxPlayers) {
    fail(ErrorCode::kArityGuard, "oracle: " + std::to_string(m.pipeline.input_width()) +
                                     " features exceeds the limit of " + std::to_string(kMaxPlayers));
  }
  BaselineSource baselines(c, m);
  std::vector<AttributionReport> reports;
  for (const auto& id : explicand_ids(c, m.features)) {
    const std::optional<double> label = m.label_of(id);
    const BaselineSet& set = baselines.for_explicand(m.features, id);
    const Vector xe = m.features.row(m.features.row_index(id));
    AttributionReport r;
    r.explicand_id = id;
    r.feature_names = m.feature_names;
    r.attributions = interventional_shapley(scalar_model(m.pipeline, label), xe, set);
    std::vector<double> outputs;
    for (Index b = 0; b < set.size(); ++b) outputs.push_back(predict_scalar(m.pipeline, set.sample(b), label));
    r.expected_value = pairwise_mean(std::span<const double>(outputs));
    r.prediction = predict_scalar(m.pipeline, xe, label);
    r.baseline_set_id = set.id();
    reports.push_back(std::move(r));
  }
  emit(c, out, reports_text(reports, c.format));
  return 0;
}

int cmd_groups(const Config& c, std::ostream& out) {
  emit(c, out, groups_text(read_reports(c.input), c.groups, c.format));
  return 0;
}

int cmd_ablate(const Config& c, std::ostream& out) {
  const Model m = load_model(c);
  const std::vector<AttributionReport> reports = read_reports(c.attributions);
  if (reports.empty()) fail(ErrorCode::kShapeMismatch, c.attributions + ": no reports");
  const Index n = static_cast<Index>(reports.size());
  const Index width = m.features.cols();
  Matrix explicands(n, width), phi(n, width);
  std::vector<std::optional<double>> labels;
  for (Index r = 0; r < n; ++r) {
    const AttributionReport& rep = reports[static_cast<std::size_t>(r)];
    if (rep.feature_names != m.feature_names) {
      fail(ErrorCode::kShapeMismatch, "report for '" + rep.explicand_id + "' does not match the pipeline features");
    }
    explicands.row(r) = m.features.row(m.features.row_index(rep.explicand_id)).transpose();
    phi.row(r) = rep.attributions.transpose();
    if (!m.labels.empty()) labels.push_back(m.label_of(rep.explicand_id));
  }
  // Imputation values: column means of the chosen baselines, or of the data.
  Vector impute;
  if (!c.baseline_ids.empty() || c.uniform > 0) {
    BaselineSource src(c, m);
    const BaselineSet& set = src.for_explicand(m.features, reports.front().explicand_id);
    impute = set.samples().colwise().mean().transpose();
  } else {
    impute = m.features.values().colwise().mean().transpose();
  }
  const Index kmax = c.kmax < 0 ? width : c.kmax;
  const AblationCurve curve =
      ablation_curve(m.pipeline, explicands, phi, impute, parse_ablation_sign(c.sign), kmax, labels);
  if (c.format == "csv") {
    emit(c, out, to_csv(curve));
  } else {
    json doc;
    doc["sign"] = std::string(to_string(curve.sign));
    doc["mean_output"] = curve.mean_output;
    emit(c, out, dump(doc));
  }
  return 0;
}

int cmd_baselines(const Config& c, std::ostream& out) {
  const Dataset data = load_csv(c.data);
  if (c.uniform > 0) {
    const BaselineSet set = uniform_sample(data, c.uniform, c.seed);
    json doc;
    doc["baseline_set_id"] = id_set_hash(set.sample_ids());
    doc["content_id"] = set.id();
    doc["sample_ids"] = set.sample_ids();
    emit(c, out, dump(doc));
    return 0;
  }
  if (!c.cluster_model.empty()) {
    const ClusterModel model = cluster_model_from_json(read_json(c.cluster_model));
    const Dataset reduced = data.select_columns(model.reduced_features);
    std::vector<long> sizes(static_cast<std::size_t>(model.k()), 0);
    json members = json::object();
    for (Index r = 0; r < reduced.rows(); ++r) {
      const Index k = assign_baseline_cluster(model, reduced.row(r));
      ++sizes[static_cast<std::size_t>(k)];
      members[reduced.ids()[static_cast<std::size_t>(r)]] = k;
    }
    json clusters = json::array();
    for (Index k = 0; k < model.k(); ++k) {
      json cl;
      cl["cluster"] = k;
      std::vector<double> centroid;
      for (Index j = 0; j < model.centroids.cols(); ++j) centroid.push_back(model.centroids(k, j));
      cl["centroid"] = centroid;
      cl["size"] = sizes[static_cast<std::size_t>(k)];
      clusters.push_back(cl);
    }
    json doc;
    doc["k"] = model.k();
    doc["reduced_features"] = model.reduced_features;
    doc["clusters"] = clusters;
    doc["assignments"] = members;
    emit(c, out, dump(doc));
    return 0;
  }
  if (c.kmeans <= 0) fail(ErrorCode::kInvalidArgument, "baselines needs --kmeans K, --uniform N or --cluster-model");
  if (c.reduced_features.empty()) fail(ErrorCode::kInvalidArgument, "--kmeans needs --reduced-features");
  KMeansOptions o;
  o.k = c.kmeans;
  o.seed = c.seed;
  o.max_iter = c.max_iter;
  o.tol = c.tol;
  const ClusterModel model = kmeans_fit(data.select_columns(c.reduced_features).values(), o, c.reduced_features);
  emit(c, out, dump(to_json(model)));
  return 0;
}

int cmd_eval(const Config& c, std::ostream& out) {
  const Model m = load_model(c);
  std::vector<std::string> ids = explicand_ids(c, m.features);
  if (c.format == "csv") {
    std::string text = "id,output\n";
    for (const auto& id : ids) {
      const Vector x = m.features.row(m.features.row_index(id));
      text += id + "," + format_double(predict_scalar(m.pipeline, x, m.label_of(id))) + "\n";
    }
    emit(c, out, text);
    return 0;
  }
  json arr = json::array();
  for (const auto& id : ids) {
    const ForwardTrace t = evaluate(m.pipeline, m.features.row(m.features.row_index(id)), m.label_of(id));
    json stages = json::array();
    for (const auto& v : t.values) stages.push_back(std::vector<double>(v.data(), v.data() + v.size()));
    arr.push_back({{"id", id}, {"trace", stages}});
  }
  emit(c, out, dump(arr));
  return 0;
}

int cmd_serve(const Config& c, std::ostream& out) {
  if (c.score.empty()) fail(ErrorCode::kInvalidArgument, "serve needs --score NAME");
  if (c.baseline_ids.empty()) fail(ErrorCode::kEmptyBaselineSet, "serve needs --baseline-ids");
  const Pipeline p = load_pipeline_file(c.pipeline);
  Dataset data = load_csv(c.data);
  distributed::NodeService service(c.node_id.empty() ? c.score : c.node_id, {{c.score, p}}, std::move(data),
                                   {c.baseline_ids});
  distributed::TcpNodeServer server(service, static_cast<std::uint16_t>(c.port), c.host);
  g_interrupted = false;
  auto previous_int = std::signal(SIGINT, on_signal);
  auto previous_term = std::signal(SIGTERM, on_signal);
  server.start();
  json desc = distributed::to_json({service.descriptor(server.endpoint())});
  out << desc.front().dump() << std::endl;
  while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  std::signal(SIGINT, previous_int);
  std::signal(SIGTERM, previous_term);
  return 0;
}

int cmd_coordinate(const Config& c, std::ostream& out) {
  if (c.no_raw && c.no_scores) fail(ErrorCode::kInvalidArgument, "--no-raw and --no-scores leave nothing to write");
  const Pipeline meta = with_output_transform(load_pipeline_file(c.pipeline), c.as);
  const Dataset data = load_csv(c.data);
  distributed::TcpTransport transport;
  distributed::Coordinator coord(meta, data, distributed::load_registry_file(c.registry), transport);
  std::vector<std::string> ids = c.explicands.empty() ? data.ids() : c.explicands;
  std::vector<std::optional<double>> labels;
  if (!c.labels.empty()) {
    const Index col = data.column_index(c.labels);
    for (const auto& id : ids) labels.push_back(data.values()(data.row_index(id), col));
  } else if (meta.needs_label()) {
    fail(ErrorCode::kMissingLabel, "--as loss needs --labels COL");
  }
  distributed::CoordinateOptions opts;
  opts.workers = c.workers;
  const distributed::CoordinationResult result = coord.coordinate(ids, c.baseline_ids, opts, labels);

  std::vector<AttributionReport> raw, scores;
  json failures = json::array();
  for (const auto& o : result.outcomes) {
    raw.push_back(o.raw);
    scores.push_back(o.scores);
    if (!o.ok) failures.push_back({{"explicand_id", o.explicand_id}, {"error", o.error}});
  }
  if (c.format == "csv") {
    emit(c, out, reports_text(c.no_raw ? scores : raw, "csv"));
  } else {
    json doc;
    auto arr = [](const std::vector<AttributionReport>& rs) {
      json a = json::array();
      for (const auto& r : rs) a.push_back(to_json(r));
      return a;
    };
    if (!c.no_raw) doc["raw"] = arr(raw);
    if (!c.no_scores) doc["scores"] = arr(scores);
    doc["failures"] = failures;
    emit(c, out, dump(doc));
  }
  return result.partial() ? 3 : 0;
}

void add_io(CLI::App* cmd, Config& c, bool pipeline = true) {
  if (pipeline) cmd->add_option("--pipeline", c.pipeline, "Pipeline JSON")->required()->check(CLI::ExistingFile);
  cmd->add_option("--data", c.data, "CSV with one row per sample")->required()->check(CLI::ExistingFile);
  cmd->add_option("--output", c.output, "Output file (default stdout)");
  cmd->add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
}

void add_model_options(CLI::App* cmd, Config& c) {
  cmd->add_option("--as", c.as, "Explain log-odds, probability or loss")
      ->check(CLI::IsMember({"logodds", "probability", "loss"}));
  cmd->add_option("--labels", c.labels, "Label column (required by --as loss)");
  cmd->add_option("--explicands", c.explicands, "Sample ids to explain (default all)")->delimiter(',');
}

void add_baseline_options(CLI::App* cmd, Config& c) {
  auto* ids = cmd->add_option("--baseline-ids", c.baseline_ids, "Baseline sample ids")->delimiter(',');
  auto* uni = cmd->add_option("--uniform", c.uniform, "Draw N baselines uniformly without replacement");
  auto* km = cmd->add_option("--kmeans", c.kmeans, "Baselines from the explicand's k-means cluster");
  auto* model = cmd->add_option("--cluster-model", c.cluster_model, "Reuse a fitted cluster model")
                    ->check(CLI::ExistingFile);
  ids->excludes(uni)->excludes(km)->excludes(model);
  uni->excludes(km)->excludes(model);
  km->excludes(model);
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--reduced-features", c.reduced_features, "Columns used for clustering")->delimiter(',');
  cmd->add_option("--max-iter", c.max_iter, "Lloyd iteration cap");
  cmd->add_option("--tol", c.tol, "Centroid movement tolerance");
  cmd->add_option("--baseline-data", c.baseline_data, "CSV holding the baseline pool (default --data)")
      ->check(CLI::ExistingFile);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Attributions for pipelines of models", "seriesshap"};
  app.require_subcommand(1);
  Config c;

  auto* explain = app.add_subcommand("explain", "Attributions averaged over a baseline set");
  add_io(explain, c);
  add_model_options(explain, c);
  add_baseline_options(explain, c);
  explain->add_option("--groups", c.groups, "Group spec JSON; emit group attributions")->check(CLI::ExistingFile);
  explain->add_option("--workers", c.workers, "Threads over baselines")->check(CLI::PositiveNumber);

  auto* oracle = app.add_subcommand("oracle", "Brute-force interventional Shapley values (up to 20 features)");
  add_io(oracle, c);
  add_model_options(oracle, c);
  add_baseline_options(oracle, c);

  auto* groups = app.add_subcommand("groups", "Group attributions from saved reports");
  groups->add_option("--input", c.input, "Reports written by explain")->required()->check(CLI::ExistingFile);
  groups->add_option("--groups", c.groups, "Group spec JSON")->required()->check(CLI::ExistingFile);
  groups->add_option("--output", c.output, "Output file (default stdout)");
  groups->add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  auto* ablate = app.add_subcommand("ablate", "Ablation curve from saved attributions");
  add_io(ablate, c);
  add_model_options(ablate, c);
  ablate->add_option("--attributions", c.attributions, "Reports written by explain")
      ->required()
      ->check(CLI::ExistingFile);
  ablate->add_option("--sign", c.sign, "pos, neg or both")->check(CLI::IsMember({"pos", "neg", "both"}));
  ablate->add_option("--kmax", c.kmax, "Largest number of ablated features");
  ablate->add_option("--baseline-ids", c.baseline_ids, "Impute with the mean of these samples")->delimiter(',');
  ablate->add_option("--uniform", c.uniform, "Impute with the mean of N uniform samples");
  ablate->add_option("--seed", c.seed, "Random seed");

  auto* baselines = app.add_subcommand("baselines", "Fit or inspect k-means baselines, or draw uniform ones");
  baselines->add_option("--data", c.data, "CSV")->required()->check(CLI::ExistingFile);
  baselines->add_option("--output", c.output, "Output file (default stdout)");
  auto* bk = baselines->add_option("--kmeans", c.kmeans, "Number of clusters");
  auto* bu = baselines->add_option("--uniform", c.uniform, "Draw N samples");
  auto* bm = baselines->add_option("--cluster-model", c.cluster_model, "Inspect a fitted model")
                 ->check(CLI::ExistingFile);
  bk->excludes(bu)->excludes(bm);
  bu->excludes(bm);
  baselines->add_option("--reduced-features", c.reduced_features, "Columns to cluster on (raw scale)")
      ->delimiter(',');
  baselines->add_option("--seed", c.seed, "Random seed");
  baselines->add_option("--max-iter", c.max_iter, "Lloyd iteration cap");
  baselines->add_option("--tol", c.tol, "Centroid movement tolerance");

  auto* serve = app.add_subcommand("serve", "Serve one private score model over TCP");
  serve->add_option("--pipeline", c.pipeline, "Score pipeline JSON")->required()->check(CLI::ExistingFile);
  serve->add_option("--data", c.data, "This node's columns, keyed by sample id")->required()->check(CLI::ExistingFile);
  serve->add_option("--score", c.score, "Score name advertised to the coordinator")->required();
  serve->add_option("--node-id", c.node_id, "Node id (default the score name)");
  serve->add_option("--baseline-ids", c.baseline_ids, "Agreed baseline sample ids")->required()->delimiter(',');
  serve->add_option("--port", c.port, "Port (0 picks one)");
  serve->add_option("--host", c.host, "IPv4 bind address");

  auto* coordinate = app.add_subcommand("coordinate", "Explain a meta-model across score-owning nodes");
  add_io(coordinate, c);
  coordinate->add_option("--registry", c.registry, "Node registry JSON")->required()->check(CLI::ExistingFile);
  coordinate->add_option("--baseline-ids", c.baseline_ids, "Agreed baseline sample ids")
      ->required()
      ->delimiter(',');
  coordinate->add_option("--explicands", c.explicands, "Sample ids to explain (default all)")->delimiter(',');
  coordinate->add_option("--as", c.as, "Explain log-odds, probability or loss")
      ->check(CLI::IsMember({"logodds", "probability", "loss"}));
  coordinate->add_option("--labels", c.labels, "Label column");
  coordinate->add_option("--workers", c.workers, "Threads over baselines")->check(CLI::PositiveNumber);
  coordinate->add_flag("--no-raw", c.no_raw, "Omit raw-feature attributions");
  coordinate->add_flag("--no-scores", c.no_scores, "Omit score-level attributions");

  auto* eval = app.add_subcommand("eval", "Forward traces");
  add_io(eval, c);
  add_model_options(eval, c);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    if (explain->parsed()) return cmd_explain(c, out);
    if (oracle->parsed()) return cmd_oracle(c, out);
    if (groups->parsed()) return cmd_groups(c, out);
    if (ablate->parsed()) return cmd_ablate(c, out);
    if (baselines->parsed()) return cmd_baselines(c, out);
    if (serve->parsed()) return cmd_serve(c, out);
    if (coordinate->parsed()) return cmd_coordinate(c, out);
    if (eval->parsed()) return cmd_eval(c, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace seriesshap::cli

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

#include <gtest/gtest.h>

#include "json.hpp"
#include "seriesshap/chain_engine.hpp"
#include "seriesshap/dataset.hpp"
#include "seriesshap/distributed/transport.hpp"
#include "support/files.hpp"
#include "support/stack.hpp"

using namespace seriesshap;
using json = nlohmann::ordered_json;
using ref::run_cli;

namespace {

Pipeline relu_sum() {
  return Pipeline({Stage::linear(Matrix{{1.0, 1.0}}, Vector::Zero(1)), Stage::activation(Activation::kRelu, 1)},
                  {"x1", "x2"});
}

std::string pipeline_file(const ref::TempDir& dir, const std::string& name, const Pipeline& p) {
  return dir.write(name, to_json(p).dump(2));
}

// Random dataset with ids r0.. and columns c0..
std::string random_csv(ref::Rng& rng, Index rows, Index cols, const std::vector<std::string>& names = {}) {
  std::vector<std::string> ids, cn = names;
  for (Index r = 0; r < rows; ++r) ids.push_back("r" + std::to_string(r));
  if (cn.empty())
    for (Index c = 0; c < cols; ++c) cn.push_back("c" + std::to_string(c));
  Matrix v(rows, cols);
  for (Index r = 0; r < rows; ++r) v.row(r) = ref::random_vector(rng, cols).transpose();
  return to_csv(Dataset(ids, cn, v));
}

}  // namespace

TEST(Cli, ExplainReluExample) {
  ref::TempDir dir;
  const auto p = pipeline_file(dir, "p.json", relu_sum());
  const auto d = dir.write("d.csv", "id,x1,x2\ne,2,1\nb,0,0\n");
  const auto r = run_cli({"explain", "--pipeline", p, "--data", d, "--explicands", "e", "--baseline-ids", "b"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json doc = json::parse(r.out);
  ASSERT_EQ(doc.size(), 1u);
  EXPECT_EQ(doc[0]["explicand_id"], "e");
  EXPECT_EQ(doc[0]["attributions"][0]["feature"], "x1");
  EXPECT_EQ(doc[0]["attributions"][0]["value"].get<double>(), 2.0);
  EXPECT_EQ(doc[0]["attributions"][1]["value"].get<double>(), 1.0);
  EXPECT_EQ(doc[0]["expected_value"].get<double>(), 0.0);
  EXPECT_EQ(doc[0]["baseline_set_id"].get<std::string>().size(), 64u);

  const auto csv = run_cli({"explain", "--pipeline", p, "--data", d, "--explicands", "e", "--baseline-ids", "b",
                            "--format", "csv"});
  ASSERT_EQ(csv.code, 0) << csv.err;
  EXPECT_EQ(csv.out, "explicand_id,x1,x2,expected_value\ne,2,1,0\n");
}

TEST(Cli, OracleExampleAndGuard) {
  ref::TempDir dir;
  const auto p = pipeline_file(dir, "p.json", relu_sum());
  const auto d = dir.write("d.csv", "id,x1,x2\ne,2,-1\nb,0,0\n");
  const auto ok = run_cli({"oracle", "--pipeline", p, "--data", d, "--explicands", "e", "--baseline-ids", "b"});
  ASSERT_EQ(ok.code, 0) << ok.err;
  const json doc = json::parse(ok.out);
  EXPECT_DOUBLE_EQ(doc[0]["attributions"][0]["value"].get<double>(), 1.5);
  EXPECT_DOUBLE_EQ(doc[0]["attributions"][1]["value"].get<double>(), -0.5);

  ref::Rng rng(91);
  const auto wide = pipeline_file(dir, "wide.json", Pipeline({Stage::linear(Matrix::Ones(1, 21), Vector::Zero(1))}));
  const auto wd = dir.write("wide.csv", random_csv(rng, 3, 21));
  const auto guard = run_cli({"oracle", "--pipeline", wide, "--data", wd, "--baseline-ids", "r1"});
  EXPECT_EQ(guard.code, 2);
  EXPECT_NE(guard.err.find("20"), std::string::npos) << guard.err;
  EXPECT_NE(guard.err.find("21"), std::string::npos) << guard.err;
}

TEST(Cli, EvalMalformedCsvNamesRow) {
  ref::TempDir dir;
  const auto p = pipeline_file(dir, "p.json", relu_sum());
  const auto d = dir.write("bad.csv", "id,x1,x2\ne,2,1\nb,zero,0\n");
  const auto r = run_cli({"eval", "--pipeline", p, "--data", d});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("bad.csv:3"), std::string::npos) << r.err;

  const auto good = dir.write("good.csv", "id,x1,x2\ne,2,1\nb,-3,0\n");
  const auto e = run_cli({"eval", "--pipeline", p, "--data", good, "--format", "csv"});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_EQ(e.out, "id,output\ne,3\nb,0\n");
}

TEST(Cli, UsageErrors) {
  ref::TempDir dir;
  const auto p = pipeline_file(dir, "p.json", relu_sum());
  const auto d = dir.write("d.csv", "id,x1,x2\ne,2,1\nb,0,0\n");
  EXPECT_EQ(run_cli({"explain", "--pipeline", p, "--data", d, "--baseline-ids", "b", "--uniform", "1"}).code, 1);
  EXPECT_EQ(run_cli({"explain", "--pipeline", p, "--data", d, "--format", "xml", "--baseline-ids", "b"}).code, 1);
  EXPECT_EQ(run_cli({"explain", "--pipeline", dir.file("missing.json"), "--data", d}).code, 1);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 1);
  const auto unknown = run_cli({"explain", "--pipeline", p, "--data", d, "--baseline-ids", "nobody"});
  EXPECT_EQ(unknown.code, 2);
  EXPECT_NE(unknown.err.find("nobody"), std::string::npos) << unknown.err;
}

TEST(Cli, ExplainThenGroupsEqualsOneShot) {
  ref::Rng rng(92);
  ref::TempDir dir;
  const Pipeline p = ref::label_free(rng, 5, 4, {"c0", "c1", "c2", "c3", "c4"});
  const auto pf = pipeline_file(dir, "p.json", p);
  const auto d = dir.write("d.csv", random_csv(rng, 12, 5));
  const auto g = dir.write("g.json", R"({"groups": {"front": ["c0", "c1"], "mid": ["c1", "c2", "c3"]}})");
  for (const std::string fmt : {"json", "csv"}) {
    const std::vector<std::string> common{"--pipeline", pf, "--data", d, "--uniform", "4", "--seed", "5",
                                          "--explicands", "r0,r1,r7"};
    std::vector<std::string> first{"explain"};
    first.insert(first.end(), common.begin(), common.end());
    first.insert(first.end(), {"--output", dir.file("reports.json")});
    ASSERT_EQ(run_cli(first).code, 0);
    const auto two = run_cli({"groups", "--input", dir.file("reports.json"), "--groups", g, "--format", fmt});
    ASSERT_EQ(two.code, 0) << two.err;

    std::vector<std::string> once{"explain"};
    once.insert(once.end(), common.begin(), common.end());
    once.insert(once.end(), {"--groups", g, "--format", fmt});
    const auto one = run_cli(once);
    ASSERT_EQ(one.code, 0) << one.err;
    EXPECT_EQ(one.out, two.out);
  }
}

TEST(Cli, WorkerCountGivesIdenticalBytes) {
  ref::Rng rng(93);
  ref::TempDir dir;
  const Pipeline p = ref::label_free(rng, 6, 6, {"c0", "c1", "c2", "c3", "c4", "c5"});
  const auto pf = pipeline_file(dir, "p.json", p);
  const auto d = dir.write("d.csv", random_csv(rng, 40, 6));
  for (const std::string fmt : {"json", "csv"}) {
    std::string previous;
    for (const std::string w : {"1", "4"}) {
      const auto out = dir.file("out_" + w + "." + fmt);
      const auto r = run_cli({"explain", "--pipeline", pf, "--data", d, "--uniform", "25", "--seed", "11", "--workers",
                              w, "--format", fmt, "--output", out});
      ASSERT_EQ(r.code, 0) << r.err;
      const std::string bytes = ref::slurp(out);
      EXPECT_FALSE(bytes.empty());
      if (!previous.empty()) EXPECT_EQ(bytes, previous);
      previous = bytes;
    }
  }
}

TEST(Cli, OutputTransformIsPipelineSuffix) {
  ref::Rng rng(94);
  ref::TempDir dir;
  const Pipeline p = ref::label_free(rng, 3, 3, {"c0", "c1", "c2"});
  const auto d = dir.write("d.csv", "id,c0,c1,c2,y\n" + [&] {
    std::string rows;
    for (int r = 0; r < 6; ++r) {
      const Vector v = ref::random_vector(rng, 3);
      rows += "r" + std::to_string(r) + "," + std::to_string(v(0)) + "," + std::to_string(v(1)) + "," +
              std::to_string(v(2)) + "," + (r % 2 ? "1" : "0") + "\n";
    }
    return rows;
  }());
  const auto pf = pipeline_file(dir, "p.json", p);
  const auto prob = pipeline_file(dir, "prob.json", p.then(Stage::transform(TransformKind::kSigmoid)));
  const std::vector<std::string> sel{"--data", d, "--baseline-ids", "r2,r3,r4", "--explicands", "r0,r1", "--labels", "y"};
  auto with = [&](std::vector<std::string> head) {
    head.insert(head.end(), sel.begin(), sel.end());
    return run_cli(head);
  };
  const auto a = with({"explain", "--pipeline", pf, "--as", "probability"});
  const auto b = with({"explain", "--pipeline", prob});
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(a.out, b.out);

  const auto loss = pipeline_file(
      dir, "loss.json", p.then(Stage::transform(TransformKind::kSigmoid)).then(Stage::transform(TransformKind::kBceLoss)));
  const auto c = with({"explain", "--pipeline", pf, "--as", "loss"});
  const auto e = with({"explain", "--pipeline", loss});
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_EQ(c.out, e.out);
  const json doc = json::parse(c.out);
  // the label column is not a feature
  EXPECT_EQ(doc[0]["attributions"].size(), 3u);
}

TEST(Cli, BaselinesAndKMeansExplain) {
  ref::TempDir dir;
  const auto d = dir.write("d.csv", "id,x1,x2\na,0,0\nb,0.1,0\nc,10,10\nd,10.1,10\n");
  const auto fit = run_cli({"baselines", "--data", d, "--kmeans", "2", "--reduced-features", "x1", "--seed", "3",
                            "--output", dir.file("km.json")});
  ASSERT_EQ(fit.code, 0) << fit.err;
  const json model = json::parse(ref::slurp(dir.file("km.json")));
  EXPECT_EQ(model["centroids"].size(), 2u);

  const auto u1 = run_cli({"baselines", "--data", d, "--uniform", "2", "--seed", "9"});
  const auto u2 = run_cli({"baselines", "--data", d, "--uniform", "2", "--seed", "9"});
  ASSERT_EQ(u1.code, 0) << u1.err;
  EXPECT_EQ(u1.out, u2.out);

  const auto p = pipeline_file(dir, "p.json", relu_sum());
  const auto r = run_cli({"explain", "--pipeline", p, "--data", d, "--cluster-model", dir.file("km.json"),
                          "--explicands", "b"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json doc = json::parse(r.out);
  // b's cluster is {a, b}: baselines (0,0) and (0.1,0)
  EXPECT_DOUBLE_EQ(doc[0]["expected_value"].get<double>(), 0.05);
  EXPECT_DOUBLE_EQ(doc[0]["attributions"][0]["value"].get<double>(), 0.05);
  EXPECT_EQ(doc[0]["attributions"][1]["value"].get<double>(), 0.0);
}

TEST(Cli, AblateFromReports) {
  ref::TempDir dir;
  const auto p = pipeline_file(dir, "p.json",
                               Pipeline({Stage::linear(Matrix{{2.0, 1.0}}, Vector::Zero(1))}, {"x1", "x2"}));
  const auto d = dir.write("d.csv", "id,x1,x2\ne,1,1\nb,0,0\n");
  ASSERT_EQ(run_cli({"explain", "--pipeline", p, "--data", d, "--explicands", "e", "--baseline-ids", "b", "--output",
                     dir.file("r.json")})
                .code,
            0);
  const auto r = run_cli({"ablate", "--pipeline", p, "--data", d, "--attributions", dir.file("r.json"), "--baseline-ids",
                          "b", "--sign", "pos", "--kmax", "2", "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "k,mean_output,sign\n0,3,positive\n1,1,positive\n2,0,positive\n");
}

TEST(Cli, CoordinateMatchesCentralized) {
  ref::Rng rng(95);
  ref::TempDir dir;
  const std::vector<std::string> baselines{"id1", "id2", "id4"};
  ref::Stack s = ref::make_stack(rng, {2, 2}, 1, 6, {baselines});
  std::vector<std::unique_ptr<distributed::TcpNodeServer>> servers;
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    servers.push_back(std::make_unique<distributed::TcpNodeServer>(*s.nodes[i]));
    servers.back()->start();
    s.registry[i].endpoint = servers.back()->endpoint();
  }
  const auto reg = dir.write("registry.json", distributed::to_json(s.registry).dump(2));
  const auto meta = pipeline_file(dir, "meta.json", s.meta);
  const auto data = dir.write("coord.csv", to_csv(s.coordinator_data));
  const auto r = run_cli({"coordinate", "--pipeline", meta, "--data", data, "--registry", reg, "--baseline-ids",
                          "id1,id2,id4", "--explicands", "id0,id3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json doc = json::parse(r.out);
  EXPECT_TRUE(doc["failures"].empty());
  const BaselineSet set(s.raw_rows(baselines));
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& rep = doc["raw"][i];
    const AttributionReport central =
        chain_with_distribution(s.stitched, s.raw_row(rep["explicand_id"].get<std::string>()), set);
    Vector got(static_cast<Index>(rep["attributions"].size()));
    for (std::size_t j = 0; j < rep["attributions"].size(); ++j) {
      EXPECT_EQ(rep["attributions"][j]["feature"], s.raw_names[j]);
      got(static_cast<Index>(j)) = rep["attributions"][j]["value"].get<double>();
    }
    EXPECT_LE(ref::max_rel(got, central.attributions), 1e-9);
  }
  // stop one node: the run reports partial results
  servers[1]->stop();
  const auto partial = run_cli({"coordinate", "--pipeline", meta, "--data", data, "--registry", reg, "--baseline-ids",
                                "id1,id2,id4", "--explicands", "id0"});
  EXPECT_EQ(partial.code, 3) << partial.err;
  servers[0]->stop();
}

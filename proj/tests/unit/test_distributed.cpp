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

#include <set>

#include "json.hpp"
#include "seriesshap/chain_engine.hpp"
#include "seriesshap/distributed/coordinator.hpp"
#include "seriesshap/distributed/protocol.hpp"
#include "seriesshap/distributed/transport.hpp"
#include "seriesshap/format.hpp"
#include "support/stack.hpp"

using namespace seriesshap;
using namespace seriesshap::distributed;
using json = nlohmann::ordered_json;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

std::string random_text(ref::Rng& rng) {
  static const std::vector<std::string> alphabet{"a", "b", "X", "Z", "0", "9", "_", "-", "\"", "\\", " ", "é", "{", "}", ":", ","};
  std::string s;
  const int n = ref::uniform_int(rng, 0, 12);
  for (int i = 0; i < n; ++i) s += alphabet[static_cast<std::size_t>(ref::uniform_int(rng, 0, static_cast<int>(alphabet.size()) - 1))];
  return s;
}

double random_double(ref::Rng& rng) {
  switch (ref::uniform_int(rng, 0, 3)) {
    case 0: return 0.0;
    case 1: return ref::uniform(rng, -1, 1) * 1e-300;
    case 2: return ref::uniform(rng, -1, 1) * 1e300;
    default: return ref::uniform(rng, -10, 10);
  }
}

// Node owning one linear score s = x1 + x2 over columns a, b.
NodeService sum_node(const std::vector<std::vector<std::string>>& sets) {
  const Pipeline score({Stage::linear(Matrix{{1.0, 1.0}}, Vector::Zero(1))}, {"a", "b"});
  const Dataset cols({"e", "z", "w"}, {"a", "b"}, Matrix{{0.3, 0.1}, {0.0, 0.0}, {0.3, 0.1}});
  return NodeService("bureau", {{"s", score}}, cols, sets);
}

// Rewrites every node reply with `edit`.
class TamperingTransport : public LoopbackTransport {
 public:
  std::function<std::string(std::string)> edit;

 protected:
  std::string send(const NodeDescriptor& node, const std::string& frame) override {
    return edit(LoopbackTransport::send(node, frame));
  }
};

void expect_matches_centralized(const ref::Stack& s, const CoordinationResult& r,
                                const std::vector<std::string>& explicands, const std::vector<std::string>& baselines) {
  ASSERT_EQ(r.outcomes.size(), explicands.size());
  const BaselineSet raw_set(s.raw_rows(baselines));
  const BaselineSet meta_set(s.coordinator_data.select_rows([&] {
    std::vector<Index> rows;
    for (const auto& b : baselines) rows.push_back(s.coordinator_data.row_index(b));
    return rows;
  }()).values());
  for (std::size_t i = 0; i < explicands.size(); ++i) {
    const ExplicandOutcome& o = r.outcomes[i];
    ASSERT_TRUE(o.ok) << o.error;
    const AttributionReport central = chain_with_distribution(s.stitched, s.raw_row(explicands[i]), raw_set);
    EXPECT_LE(ref::max_rel(o.raw.attributions, central.attributions), 1e-9);
    EXPECT_NEAR(o.raw.expected_value, central.expected_value, 1e-12 * (1 + std::abs(central.expected_value)));
    const AttributionReport meta = chain_with_distribution(
        s.meta, s.coordinator_data.values().row(s.coordinator_data.row_index(explicands[i])).transpose(), meta_set);
    EXPECT_LE(ref::max_rel(o.scores.attributions, meta.attributions), 1e-9);
  }
}

}  // namespace

TEST(Protocol, RoundTripRandomMessages) {
  ref::Rng rng(81);
  for (int t = 0; t < 300; ++t) {
    Message msg;
    switch (t % 3) {
      case 0:
        msg = ScoreAttributionRequest{1, random_text(rng), random_text(rng), random_text(rng), random_text(rng) + "s",
                                      random_double(rng)};
        break;
      case 1: {
        ScoreAttributionResponse r{1, random_text(rng), random_text(rng), random_text(rng), "s" + random_text(rng), {}, random_double(rng)};
        std::set<std::string> used;
        for (int k = ref::uniform_int(rng, 0, 4); k > 0; --k) {
          std::string name = "f" + random_text(rng);
          if (used.insert(name).second) r.attrs.emplace_back(name, random_double(rng));
        }
        msg = r;
        break;
      }
      default:
        msg = ErrorReply{1, random_text(rng), random_text(rng), random_text(rng), random_text(rng), "unknown_sample",
                         random_text(rng)};
    }
    const std::string frame = encode_message(msg);
    EXPECT_EQ(frame.find('\n'), std::string::npos);
    EXPECT_EQ(decode_message(frame), msg);
    EXPECT_EQ(encode_message(decode_message(frame)), frame);
  }
}

TEST(Protocol, CanonicalLayout) {
  const std::string frame = encode_message(ScoreAttributionRequest{1, "h", "e", "b", "s", 0.1});
  EXPECT_EQ(frame, R"({"v":1,"type":"req","baseline_set":"h","explicand":"e","baseline":"b","score":"s","value":0.10000000000000001})");
}

TEST(Protocol, Errors) {
  EXPECT_EQ(code_of([] { decode_message(R"({"v":1,"type":"req","baseline_set":"h","explicand":"e","baseline":"b","value":1})"); }),
            ErrorCode::kMalformedFrame);
  EXPECT_EQ(code_of([] { decode_message(R"({"v":"2","type":"req","baseline_set":"h","explicand":"e","baseline":"b","score":"s","value":1})"); }),
            ErrorCode::kVersion);
  EXPECT_EQ(code_of([] { decode_message(R"({"v":2,"type":"req","baseline_set":"h","explicand":"e","baseline":"b","score":"s","value":1})"); }),
            ErrorCode::kVersion);
  EXPECT_EQ(code_of([] { decode_message(R"({"v":1,"type":"req","baseline_set":"h","explicand":"e","baseline":"b","score":"s","value":1,"weights":[1]})"); }),
            ErrorCode::kMalformedFrame);
  EXPECT_EQ(code_of([] { decode_message("not json"); }), ErrorCode::kMalformedFrame);
  EXPECT_EQ(code_of([] { encode_message(ScoreAttributionRequest{1, "h", "e", "b", "s", NAN}); }), ErrorCode::kMalformedFrame);
  EXPECT_EQ(code_of([] { encode_message(ScoreAttributionRequest{1, "h", "\xff", "b", "s", 1.0}); }), ErrorCode::kMalformedFrame);
  EXPECT_EQ(code_from_wire(wire_code(ErrorCode::kBaselineMismatch)), ErrorCode::kBaselineMismatch);
}

TEST(Node, ScalesByScoreDelta) {
  const std::vector<std::string> set{"z"};
  const NodeService node = sum_node({set});
  const Message m = node.handle({1, id_set_hash(set), "e", "z", "s", 0.8});
  const auto* r = std::get_if<ScoreAttributionResponse>(&m);
  ASSERT_NE(r, nullptr);
  ASSERT_EQ(r->attrs.size(), 2u);
  EXPECT_EQ(r->attrs[0].first, "a");
  EXPECT_NEAR(r->attrs[0].second, 0.6, 1e-15);
  EXPECT_NEAR(r->attrs[1].second, 0.2, 1e-15);
  EXPECT_NEAR(r->attrs[0].second + r->attrs[1].second, 0.8, 1e-15);
  EXPECT_NEAR(r->score_delta, 0.4, 1e-15);

  const auto zero = std::get<ScoreAttributionResponse>(node.handle({1, id_set_hash(set), "e", "z", "s", 0.0}));
  for (const auto& [name, v] : zero.attrs) EXPECT_EQ(v, 0.0);
  // explicand equal to baseline: zero delta, zero attributions
  const NodeService both = sum_node({set, {"w"}});
  const auto same = std::get<ScoreAttributionResponse>(both.handle({1, id_set_hash({"w"}), "e", "w", "s", 0.0}));
  EXPECT_EQ(same.score_delta, 0.0);
  for (const auto& [name, v] : same.attrs) EXPECT_EQ(v, 0.0);
}

TEST(Node, RefusesStaleOrUnknown) {
  const std::vector<std::string> set{"z"};
  const NodeService node = sum_node({set});
  const auto stale = std::get<ErrorReply>(node.handle({1, id_set_hash({"z", "w"}), "e", "z", "s", 0.8}));
  EXPECT_EQ(code_from_wire(stale.code), ErrorCode::kBaselineMismatch);
  const auto outside = std::get<ErrorReply>(node.handle({1, id_set_hash(set), "e", "w", "s", 0.8}));
  EXPECT_EQ(code_from_wire(outside.code), ErrorCode::kBaselineMismatch);
  const auto unknown = std::get<ErrorReply>(node.handle({1, id_set_hash(set), "nobody", "z", "s", 0.8}));
  EXPECT_EQ(code_from_wire(unknown.code), ErrorCode::kUnknownSample);
  const auto wrong_score = std::get<ErrorReply>(node.handle({1, id_set_hash(set), "e", "z", "t", 0.8}));
  EXPECT_NE(wrong_score.code, "");
  const std::string bad = node.handle_frame(R"({"v":2,"type":"req","baseline_set":"h","explicand":"e","baseline":"b","score":"s","value":1})");
  EXPECT_EQ(code_from_wire(std::get<ErrorReply>(decode_message(bad)).code), ErrorCode::kVersion);
  EXPECT_THROW(NodeService("x", {}, Dataset({"a"}, {"c"}, Matrix{{1.0}}), {{"missing"}}), Error);
}

TEST(Node, ReplayIsByteIdentical) {
  const std::vector<std::string> set{"z", "w"};
  const NodeService node = sum_node({set});
  const std::string frame = encode_message(ScoreAttributionRequest{1, id_set_hash(set), "e", "z", "s", 0.123456789});
  const std::string first = node.handle_frame(frame);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(node.handle_frame(frame), first);
}

TEST(Registry, Validation) {
  const json ok = json::parse(R"([{"id":"a","scores":["s"],"features":["x"],"endpoint":"h:1"},
                                  {"id":"b","scores":["t"],"features":["y"],"endpoint":""}])");
  const auto reg = load_registry(ok);
  ASSERT_EQ(reg.size(), 2u);
  EXPECT_EQ(load_registry(to_json(reg)), reg);
  EXPECT_THROW(load_registry(json::parse(R"([{"id":"a","scores":["s"],"features":["x"]},{"id":"a","scores":["t"],"features":["y"]}])")), Error);
  EXPECT_THROW(load_registry(json::parse(R"([{"id":"a","scores":["s"],"features":["x"]},{"id":"b","scores":["s"],"features":["y"]}])")), Error);
  EXPECT_THROW(load_registry(json::parse(R"([{"id":"a","scores":["s"],"features":["x"]},{"id":"b","scores":["t"],"features":["x"]}])")), Error);
  EXPECT_THROW(load_registry(json::parse(R"([{"id":"a","scores":["s"],"features":["x"],"weights":[1]}])")), Error);
}

TEST(Coordinator, SingleNodeIdentityMeta) {
  ref::Rng rng(82);
  const std::vector<std::string> baselines{"id1", "id2", "id3"};
  ref::Stack s = ref::make_stack(rng, {3}, 0, 6, {baselines});
  // Replace the meta model with the identity on the single score.
  const Pipeline identity({Stage::linear(Matrix::Identity(1, 1), Vector::Zero(1))}, {"score0"});
  LoopbackTransport t;
  t.attach(*s.nodes[0]);
  const Coordinator c(identity, s.coordinator_data, s.registry, t);
  const ExplicandOutcome o = c.explain("id0", baselines);
  const AttributionReport own =
      chain_with_distribution(s.node_models[0], s.raw_row("id0"), BaselineSet(s.raw_rows(baselines)));
  EXPECT_LE(ref::max_rel(o.raw.attributions, own.attributions), 1e-12);
}

TEST(Coordinator, LoopbackEqualsCentralized) {
  ref::Rng rng(83);
  for (int t = 0; t < 20; ++t) {
    const int n_nodes = ref::uniform_int(rng, 2, 3);
    std::vector<Index> widths;
    for (int i = 0; i < n_nodes; ++i) widths.push_back(ref::uniform_int(rng, 1, 3));
    const Index own = ref::uniform_int(rng, 0, 3);
    const std::vector<std::string> baselines{"id3", "id4", "id5", "id6"};
    ref::Stack s = ref::make_stack(rng, widths, own, 10, {baselines});
    LoopbackTransport tr;
    for (const auto& n : s.nodes) tr.attach(*n);
    const Coordinator c(s.meta, s.coordinator_data, s.registry, tr);
    EXPECT_EQ(c.raw_feature_names(), s.raw_names);
    const std::vector<std::string> explicands{"id0", "id1", "id3"};
    expect_matches_centralized(s, c.coordinate(explicands, baselines, {.workers = 1 + t % 3}), explicands, baselines);
  }
}

TEST(Coordinator, TcpEqualsCentralizedAndFramesStayPrivate) {
  ref::Rng rng(84);
  const std::vector<std::string> baselines{"id2", "id4", "id5"};
  ref::Stack s = ref::make_stack(rng, {2, 3, 2}, 2, 8, {baselines});
  std::vector<std::unique_ptr<TcpNodeServer>> servers;
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    servers.push_back(std::make_unique<TcpNodeServer>(*s.nodes[i]));
    servers.back()->start();
    s.registry[i].endpoint = servers.back()->endpoint();
  }
  TcpTransport tr(5000);
  tr.set_capture(true);
  const Coordinator c(s.meta, s.coordinator_data, s.registry, tr);
  const std::vector<std::string> explicands{"id0", "id1"};
  expect_matches_centralized(s, c.coordinate(explicands, baselines, {.workers = 3}), explicands, baselines);

  const auto frames = tr.captured();
  ASSERT_FALSE(frames.empty());
  std::set<std::string> raw_values;
  for (Index r = 0; r < s.raw.rows(); ++r)
    for (Index j = 0; j < s.raw.cols(); ++j) raw_values.insert(format_double(s.raw(r, j)));
  const auto& allowed = allowed_wire_fields();
  for (const auto& f : frames) {
    const json doc = json::parse(f.frame);
    for (const auto& [key, value] : doc.items()) {
      EXPECT_NE(std::find(allowed.begin(), allowed.end(), key), allowed.end()) << key;
      if (value.is_number_float()) EXPECT_EQ(raw_values.count(format_double(value.get<double>())), 0u) << f.frame;
    }
    if (doc.contains("attrs"))
      for (const auto& [name, v] : doc["attrs"].items()) EXPECT_EQ(raw_values.count(format_double(v.get<double>())), 0u);
    for (const char* leak : {"weights", "bias", "threshold", "nodes", "trees", "stages"})
      EXPECT_EQ(f.frame.find(leak), std::string::npos) << leak;
  }
  for (auto& srv : servers) srv->stop();
}

TEST(Coordinator, BaselineMismatchRefused) {
  ref::Rng rng(85);
  ref::Stack s = ref::make_stack(rng, {2, 2}, 1, 6, {{"id1", "id2"}});
  LoopbackTransport tr;
  for (const auto& n : s.nodes) tr.attach(*n);
  const Coordinator c(s.meta, s.coordinator_data, s.registry, tr);
  EXPECT_EQ(code_of([&] { c.explain("id0", {"id1", "id3"}); }), ErrorCode::kBaselineMismatch);
  const CoordinationResult r = c.coordinate({"id0"}, {"id1", "id3"});
  EXPECT_TRUE(r.partial());
  EXPECT_FALSE(r.outcomes[0].ok);
}

TEST(Coordinator, UnreachableNodeGivesPartialResult) {
  ref::Rng rng(86);
  const std::vector<std::string> baselines{"id1", "id2"};
  ref::Stack s = ref::make_stack(rng, {2, 2}, 1, 6, {baselines});
  s.registry[1].endpoint = "127.0.0.1:1";
  TcpTransport tr(500);
  std::unique_ptr<TcpNodeServer> up = std::make_unique<TcpNodeServer>(*s.nodes[0]);
  up->start();
  s.registry[0].endpoint = up->endpoint();
  const Coordinator c(s.meta, s.coordinator_data, s.registry, tr);
  const CoordinationResult r = c.coordinate({"id0", "id3"}, baselines);
  EXPECT_TRUE(r.partial());
  for (const auto& o : r.outcomes) {
    EXPECT_FALSE(o.ok);
    EXPECT_FALSE(o.raw.flags.notes.empty());
  }
  EXPECT_EQ(code_of([&] { c.explain("id0", baselines); }), ErrorCode::kUnreachable);
  up->stop();
}

TEST(Coordinator, ZeroBaselinesFailBeforeTraffic) {
  ref::Rng rng(87);
  ref::Stack s = ref::make_stack(rng, {2}, 1, 4, {{"id1"}});
  LoopbackTransport tr;
  tr.set_capture(true);
  for (const auto& n : s.nodes) tr.attach(*n);
  const Coordinator c(s.meta, s.coordinator_data, s.registry, tr);
  EXPECT_EQ(code_of([&] { c.coordinate({"id0"}, {}); }), ErrorCode::kEmptyBaselineSet);
  EXPECT_TRUE(tr.captured().empty());
}

TEST(Coordinator, TamperedResponseRejected) {
  ref::Rng rng(88);
  const std::vector<std::string> baselines{"id1", "id2"};
  ref::Stack s = ref::make_stack(rng, {2}, 1, 4, {baselines});
  TamperingTransport tr;
  tr.attach(*s.nodes[0]);
  tr.edit = [](std::string frame) {
    Message m = decode_message(frame);
    if (auto* r = std::get_if<ScoreAttributionResponse>(&m)) {
      for (auto& [name, v] : r->attrs) v = v * 1.5 + 0.25;
    }
    return encode_message(m);
  };
  const Coordinator c(s.meta, s.coordinator_data, s.registry, tr);
  EXPECT_EQ(code_of([&] { c.explain("id0", baselines); }), ErrorCode::kRejectedResponse);

  tr.edit = [](std::string frame) {
    Message m = decode_message(frame);
    if (auto* r = std::get_if<ScoreAttributionResponse>(&m)) r->score_delta += 1.0;
    return encode_message(m);
  };
  EXPECT_EQ(code_of([&] { c.explain("id0", baselines); }), ErrorCode::kRejectedResponse);
}

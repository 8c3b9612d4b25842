// Copyright 2026 The mmrecun Authors
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
#include <doctest.h>

#include <map>

#include "mmrecun/errors.hpp"
#include "mmrecun/graph.hpp"
#include "oracles.hpp"

using namespace mmrecun;
using namespace mmrecun::testing;

namespace {

InteractionGraph graph_with_user_degrees(const std::vector<int>& degrees, int items) {
  InteractionGraph g;
  g.num_users = static_cast<int>(degrees.size());
  g.num_items = items;
  for (int u = 0; u < g.num_users; ++u) {
    for (int i = 0; i < degrees[u]; ++i) g.edges.push_back({u, i});
    g.user_ids.push_back("u" + std::to_string(u));
  }
  for (int i = 0; i < items; ++i) g.item_ids.push_back("i" + std::to_string(i));
  normalize_edges(g.edges);
  return g;
}

std::map<int, std::array<int, 3>> per_user_counts(const DatasetSplit& s) {
  std::map<int, std::array<int, 3>> c;
  for (const Edge& e : s.train) ++c[e.user][0];
  for (const Edge& e : s.valid) ++c[e.user][1];
  for (const Edge& e : s.test) ++c[e.user][2];
  return c;
}

}  // namespace

TEST_SUITE("graph") {

TEST_CASE("load_interactions indexes by first appearance") {
  TempDir dir;
  write_file(dir / "a.csv", "user_id,item_id\na,x\na,y\nb,x\n");
  const auto g = load_interactions(dir / "a.csv", {});
  CHECK(g.num_users == 2);
  CHECK(g.num_items == 2);
  CHECK(g.edges.size() == 3);
  CHECK(g.user_ids == std::vector<std::string>{"a", "b"});
  CHECK(g.item_ids == std::vector<std::string>{"x", "y"});
  CHECK(g.edges == EdgeList{{0, 0}, {0, 1}, {1, 0}});
}

TEST_CASE("duplicate rows collapse") {
  TempDir dir;
  write_file(dir / "a.csv", "user_id,item_id,timestamp\na,x,1\na,x,2\n");
  const auto g = load_interactions(dir / "a.csv", {});
  CHECK(g.edges.size() == 1);
}

TEST_CASE("byte order mark and CRLF are tolerated") {
  TempDir dir;
  write_file(dir / "a.csv", "\xEF\xBB\xBFuser_id,item_id\r\na,x\r\n");
  const auto g = load_interactions(dir / "a.csv", {});
  CHECK(g.edges.size() == 1);
  CHECK(g.item_ids.front() == "x");
}

TEST_CASE("malformed interaction files report the line") {
  TempDir dir;
  write_file(dir / "bad_header.csv", "u,i\na,x\n");
  CHECK_THROWS_AS(load_interactions(dir / "bad_header.csv", {}), ParseError);
  write_file(dir / "bad_row.csv", "user_id,item_id\na,x\na,x,1,2\n");
  try {
    load_interactions(dir / "bad_row.csv", {});
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(load_interactions(dir / "missing.csv", {}), FileError);
}

TEST_CASE("feature files must have one row per item") {
  TempDir dir;
  write_file(dir / "a.csv", "user_id,item_id\na,x\nb,y\n");
  write_mmft(dir / "ok.mmft", Eigen::MatrixXd::Ones(2, 3));
  write_mmft(dir / "short.mmft", Eigen::MatrixXd::Ones(1, 3));
  const auto g = load_interactions(dir / "a.csv", {{"visual", dir / "ok.mmft"}});
  CHECK(g.modality_dims().at("visual") == 3);
  CHECK_THROWS_AS(load_interactions(dir / "a.csv", {{"visual", dir / "short.mmft"}}),
                  DimensionError);
}

TEST_CASE("mmft round trip through float32") {
  TempDir dir;
  Eigen::MatrixXd m(2, 3);
  m << 1.0, -2.5, 0.1, 3.0, 4.0, 1e-3;
  write_mmft(dir / "m.mmft", m);
  const auto back = read_mmft(dir / "m.mmft");
  REQUIRE(back.rows() == 2);
  REQUIRE(back.cols() == 3);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 3; ++c) CHECK(back(r, c) == static_cast<double>(static_cast<float>(m(r, c))));
  write_file(dir / "bad.mmft", "MMFX");
  CHECK_THROWS_AS(read_mmft(dir / "bad.mmft"), ParseError);
  const auto bytes = read_file(dir / "m.mmft");
  write_file(dir / "cut.mmft", bytes.substr(0, bytes.size() - 2));
  CHECK_THROWS_AS(read_mmft(dir / "cut.mmft"), ParseError);
}

TEST_CASE("split sizes per user") {
  const auto g = graph_with_user_degrees({10, 2, 3, 25}, 30);
  const auto s = split_dataset(g, 7);
  auto c = per_user_counts(s);
  CHECK(c[0] == std::array<int, 3>{8, 1, 1});
  CHECK(c[1] == std::array<int, 3>{2, 0, 0});
  CHECK(c[2] == std::array<int, 3>{1, 1, 1});
  CHECK(c[3] == std::array<int, 3>{21, 2, 2});
}

TEST_CASE("split is a deterministic partition of the edges") {
  Rng rng(3);
  const auto g = random_graph(rng, 30, 20, 0.3);
  const auto a = split_dataset(g, 11);
  const auto b = split_dataset(g, 11);
  CHECK(a.train == b.train);
  CHECK(a.valid == b.valid);
  CHECK(a.test == b.test);
  auto all = edge_union(edge_union(a.train, a.valid), a.test);
  CHECK(all == g.edges);
  CHECK(a.train.size() + a.valid.size() + a.test.size() == g.edges.size());
  const auto c = split_dataset(g, 12);
  CHECK((c.valid != a.valid || c.test != a.test));
}

TEST_CASE("mark_forget examples") {
  DatasetSplit s;
  s.num_users = 4;
  s.num_items = 3;
  s.train = {{0, 0}, {0, 1}, {1, 0}, {2, 0}, {2, 2}, {3, 1}};

  ForgetSpec one{ForgetKind::kInteraction, {{2, 2}}, {}};
  auto p = mark_forget(s, one);
  CHECK(p.forget == EdgeList{{2, 2}});
  CHECK(p.retain.size() == 5);

  ForgetSpec account{ForgetKind::kAccount, {}, {0}};
  p = mark_forget(s, account);
  CHECK(p.forget == EdgeList{{0, 0}, {0, 1}});

  ForgetSpec license{ForgetKind::kLicense, {}, {0}};
  p = mark_forget(s, license);
  CHECK(p.forget == EdgeList{{0, 0}, {1, 0}, {2, 0}});
  CHECK(edge_difference(p.retain, p.forget) == p.retain);
}

TEST_CASE("mark_forget errors") {
  DatasetSplit s;
  s.num_users = 2;
  s.num_items = 2;
  s.train = {{0, 0}, {1, 1}};
  CHECK_THROWS_AS(mark_forget(s, {ForgetKind::kInteraction, {}, {}}), ConfigError);
  CHECK_THROWS_AS(mark_forget(s, {ForgetKind::kAccount, {}, {}}), ConfigError);
  CHECK_THROWS_AS(mark_forget(s, {ForgetKind::kInteraction, {{0, 1}}, {}}), NotFoundError);
  CHECK_THROWS_AS(mark_forget(s, {ForgetKind::kLicense, {}, {2}}), NotFoundError);
  CHECK_THROWS_AS(mark_forget(s, {ForgetKind::kAccount, {}, {-1}}), NotFoundError);
}

TEST_CASE("partition laws over 1000 random specs") {
  Rng rng(2024);
  const ForgetKind kinds[] = {ForgetKind::kInteraction, ForgetKind::kUserPreference,
                              ForgetKind::kBiasedItem, ForgetKind::kAccount,
                              ForgetKind::kLicense};
  int checked = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto g = random_graph(rng, 5 + t % 11, 4 + t % 7, 0.35);
    const auto split = split_dataset(g, static_cast<std::uint64_t>(t));
    const auto spec = random_forget_spec(rng, split, kinds[t % 5]);
    const auto p = mark_forget(split, spec);
    const auto why = partition_law_violation(split, spec, p);
    INFO("spec " << t << " kind " << to_string(spec.kind));
    CHECK(why == "");
    ++checked;
  }
  CHECK(checked == 1000);
}

TEST_CASE("forget spec parsing") {
  InteractionGraph g;
  g.num_users = 2;
  g.num_items = 2;
  g.user_ids = {"alice", "bob"};
  g.item_ids = {"x", "y"};
  g.edges = {{0, 0}, {1, 1}};
  auto spec = parse_forget_spec(R"({"kind": "interaction", "edges": [["bob", "y"]]})", g);
  CHECK(spec.kind == ForgetKind::kInteraction);
  CHECK(spec.edges == EdgeList{{1, 1}});
  spec = parse_forget_spec(R"({"kind": "account", "users": ["bob", "alice"]})", g);
  CHECK(spec.nodes == std::vector<std::int32_t>{0, 1});
  spec = parse_forget_spec(R"({"kind": "license", "items": ["y"]})", g);
  CHECK(spec.nodes == std::vector<std::int32_t>{1});
  CHECK_THROWS_AS(parse_forget_spec(R"({"kind": "account", "users": ["carol"]})", g),
                  NotFoundError);
  CHECK_THROWS_AS(parse_forget_spec(R"({"kind": "account", "items": ["x"]})", g), ConfigError);
  CHECK_THROWS_AS(parse_forget_spec(R"({"kind": "license", "users": ["bob"]})", g),
                  ConfigError);
  CHECK_THROWS_AS(parse_forget_spec(R"({"kind": "everything"})", g), ConfigError);
  CHECK_THROWS_AS(parse_forget_spec("{not json", g), ParseError);
  CHECK_THROWS_AS(parse_forget_spec(R"({"edges": []})", g), ParseError);
}

TEST_CASE("adjacency hand cases") {
  auto adj = build_normalized_adjacency(1, 1, {{0, 0}});
  Eigen::MatrixXd d = Eigen::MatrixXd(adj.matrix);
  CHECK(d(0, 1) == 1.0);
  CHECK(d(1, 0) == 1.0);
  CHECK(d(0, 0) == 0.0);

  // user 0 has degree 4, item 0 only links to user 0
  adj = build_normalized_adjacency(1, 4, {{0, 0}, {0, 1}, {0, 2}, {0, 3}});
  d = Eigen::MatrixXd(adj.matrix);
  CHECK(d(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(d(1, 0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("adjacency matches the dense oracle") {
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const auto g = random_graph(rng, 10, 10, 0.3);
    const auto adj = build_normalized_adjacency(10, 10, g.edges);
    const Eigen::MatrixXd got = Eigen::MatrixXd(adj.matrix);
    const Eigen::MatrixXd want = dense_adjacency(10, 10, g.edges);
    CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK((got - got.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("isolated nodes get empty rows") {
  const auto adj = build_normalized_adjacency(3, 3, {{0, 0}});
  const Eigen::MatrixXd d = Eigen::MatrixXd(adj.matrix);
  CHECK(d.row(1).isZero());
  CHECK(d.row(5).isZero());
  CHECK(d.allFinite());
}

TEST_CASE("edge set helpers") {
  EdgeList a{{1, 1}, {0, 2}, {0, 2}, {0, 1}};
  normalize_edges(a);
  CHECK(a == EdgeList{{0, 1}, {0, 2}, {1, 1}});
  CHECK(contains_edge(a, {0, 2}));
  CHECK_FALSE(contains_edge(a, {2, 0}));
  CHECK(edge_difference(a, {{0, 2}}) == EdgeList{{0, 1}, {1, 1}});
  CHECK(edge_union(a, {{2, 0}}).size() == 4);
  const auto byu = items_by_user(3, a);
  CHECK(byu[0] == std::vector<std::int32_t>{1, 2});
  CHECK(byu[2].empty());
  const auto byi = users_by_item(3, a);
  CHECK(byi[1] == std::vector<std::int32_t>{0, 1});
}

TEST_CASE("validate rejects broken graphs") {
  InteractionGraph g;
  g.num_users = 1;
  g.num_items = 1;
  g.user_ids = {"u"};
  g.item_ids = {"i"};
  g.edges = {{0, 3}};
  CHECK_THROWS(g.validate());
  g.edges = {{0, 0}};
  g.modality_features["v"] = Eigen::MatrixXd::Zero(2, 2);
  CHECK_THROWS_AS(g.validate(), DimensionError);
}

}

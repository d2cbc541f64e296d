#include <doctest.h>

#include <map>
#include <set>

#include "oracles.hpp"
#include "socgen/error.hpp"
#include "socgen/graph.hpp"

using namespace socgen;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::kIoError;
}

}  // namespace

TEST_CASE("smallest graphs") {
  auto g = make_graph(2, {{0, 1}});
  CHECK(g.num_nodes() == 2);
  CHECK(g.num_edges() == 1);
  CHECK(degree(g, 0) == 1);
  CHECK(degree(g, 1) == 1);

  auto empty = make_graph(3, {});
  CHECK(empty.num_edges() == 0);
  for (NodeId i = 0; i < 3; ++i) CHECK(degree(empty, i) == 0);

  std::vector<Edge> k4;
  for (NodeId i = 0; i < 4; ++i)
    for (NodeId j = i + 1; j < 4; ++j) k4.push_back({i, j});
  auto g4 = make_graph(4, k4);
  for (NodeId i = 0; i < 4; ++i) CHECK(degree(g4, i) == 3);

  auto star = make_graph(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
  CHECK(degree(star, 0) == 4);
}

TEST_CASE("construction errors") {
  CHECK(code_of([] { make_graph(2, {{0, 2}}); }) == Errc::kIndexError);
  CHECK(code_of([] { make_graph(2, {{1, 1}}); }) == Errc::kSelfLoop);
  CHECK(code_of([] { make_graph(3, {{0, 1}, {1, 0}}); }) == Errc::kDuplicateEdge);
  CHECK(code_of([] { degree(make_graph(2, {}), 2); }) == Errc::kIndexError);
  CHECK(code_of([] { FeatureSchema({continuous_column("x", 0, 1), continuous_column("x", 0, 1)}); }) ==
        Errc::kSchemaError);
  CHECK(code_of([] { FeatureSchema({categorical_column("c", {"a", "a"})}); }) == Errc::kSchemaError);
  CHECK(code_of([] { FeatureSchema({continuous_column("x", 2, 1)}); }) == Errc::kSchemaError);
}

TEST_CASE("node table validation") {
  FeatureSchema schema({categorical_column("c", {"a", "b"}), continuous_column("x", 0, 10)});
  CHECK_NOTHROW(NodeTable(schema, 2, {0, 1.5, 1, 10}));
  CHECK(code_of([&] { NodeTable(schema, 1, {2, 1}); }) == Errc::kSchemaError);
  CHECK(code_of([&] { NodeTable(schema, 1, {0, 11}); }) == Errc::kSchemaError);
  CHECK(code_of([&] { NodeTable(schema, 1, {0}); }) == Errc::kDimensionError);
  CHECK(code_of([&] { NodeTable(schema, 1, {0, NAN}); }) == Errc::kSchemaError);
  NodeTable t(schema, 1, {0, NAN}, true);
  CHECK(t.has_missing());
}

TEST_CASE("adjacency is symmetric and sorted") {
  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    auto g = oracle::random_graph(15, 0.3, rng);
    std::size_t total = 0;
    for (NodeId i = 0; i < g.num_nodes(); ++i) {
      auto nb = g.neighbors(i);
      CHECK(std::is_sorted(nb.begin(), nb.end()));
      for (NodeId j : nb) {
        CHECK(g.has_edge(j, i));
        auto back = g.neighbors(j);
        CHECK(std::find(back.begin(), back.end(), i) != back.end());
      }
      total += nb.size();
    }
    CHECK(total == 2 * g.num_edges());
  }
}

TEST_CASE("neighborhood subgraph") {
  auto path = make_graph(3, {{0, 1}, {1, 2}});
  auto s0 = neighborhood_subgraph(path, 1, 0);
  CHECK(s0.graph.num_nodes() == 1);
  CHECK(s0.graph.num_edges() == 0);
  auto s1 = neighborhood_subgraph(path, 0, 1);
  CHECK(s1.graph.num_nodes() == 2);
  CHECK(s1.graph.num_edges() == 1);
  CHECK(std::set<NodeId>(s1.original_ids.begin(), s1.original_ids.end()) == std::set<NodeId>{0, 1});

  Rng rng(11);
  for (int rep = 0; rep < 30; ++rep) {
    auto g = oracle::random_graph(6, 0.35, rng);
    const NodeId root = static_cast<NodeId>(rng.index(6));
    // distance oracle by repeated relaxation on the dense adjacency
    auto a = oracle::adjacency(g);
    std::vector<int> dist(6, 99);
    dist[root] = 0;
    for (int it = 0; it < 6; ++it)
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
          if (a(i, j) > 0) dist[j] = std::min(dist[j], dist[i] + 1);
    auto sub = neighborhood_subgraph(g, root, 2);
    std::set<NodeId> expect;
    for (NodeId i = 0; i < 6; ++i)
      if (dist[i] <= 2) expect.insert(i);
    CHECK(std::set<NodeId>(sub.original_ids.begin(), sub.original_ids.end()) == expect);
    std::size_t m = 0;
    for (NodeId i : expect)
      for (NodeId j : expect)
        if (i < j && a(i, j) > 0) ++m;
    CHECK(sub.graph.num_edges() == m);
    for (const auto& e : sub.graph.edges()) CHECK(g.has_edge(sub.original_ids[e.src], sub.original_ids[e.dst]));
  }
  CHECK(code_of([&] { neighborhood_subgraph(path, 3, 1); }) == Errc::kIndexError);
}

TEST_CASE("permutations") {
  auto g = make_graph(3, {{0, 2}});
  CHECK(apply_permutation(g, Permutation::identity(3)) == g);
  auto swapped = apply_permutation(g, Permutation({1, 0, 2}));
  REQUIRE(swapped.num_edges() == 1);
  CHECK(swapped.edges()[0] == Edge{1, 2});
  CHECK(code_of([] { Permutation({0, 0, 1}); }) == Errc::kValueError);
  CHECK(code_of([&] { apply_permutation(g, Permutation::identity(4)); }) == Errc::kDimensionError);

  Rng rng(5);
  FeatureSchema schema({continuous_column("x", 0, 1)});
  for (int rep = 0; rep < 25; ++rep) {
    auto base = oracle::random_graph(5, 0.5, rng);
    std::vector<double> vals(5);
    for (auto& v : vals) v = rng.uniform();
    AttributedGraph h(NodeTable(schema, 5, vals), EdgeList(base.edges()));
    auto pi = Permutation::random(5, rng);
    auto ph = apply_permutation(h, pi);
    for (NodeId i = 0; i < 5; ++i) {
      CHECK(ph.degree(pi(i)) == h.degree(i));
      CHECK(ph.nodes().at(pi(i), 0) == h.nodes().at(i, 0));
    }
    auto back = apply_permutation(ph, pi.inverse());
    CHECK(back.nodes() == h.nodes());
    std::set<Edge> e1(back.edges().begin(), back.edges().end()), e2(h.edges().begin(), h.edges().end());
    CHECK(e1 == e2);
  }
}

TEST_CASE("erdos renyi gnm") {
  auto k5 = erdos_renyi_gnm(5, 10, 1);
  CHECK(k5.num_edges() == 10);
  CHECK(erdos_renyi_gnm(5, 0, 1).num_edges() == 0);
  CHECK(code_of([] { erdos_renyi_gnm(5, 11, 1); }) == Errc::kCapacityError);
  CHECK(erdos_renyi_gnm(30, 100, 9) == erdos_renyi_gnm(30, 100, 9));

  // each of the C(6,3) = 20 three-edge graphs on 4 nodes is equally likely
  std::map<std::vector<Edge>, int> freq;
  const int draws = 10000;
  for (int s = 0; s < draws; ++s) {
    auto g = erdos_renyi_gnm(4, 3, static_cast<std::uint64_t>(s) + 1000);
    freq[g.edges()]++;
  }
  CHECK(freq.size() == 20);
  const double p = 1.0 / 20, sigma = std::sqrt(draws * p * (1 - p));
  for (const auto& [edges, count] : freq) CHECK(std::abs(count - draws * p) < 3 * sigma);

  // dense regime uses the complement sampler
  for (std::size_t m : {0u, 1u, 20u, 44u, 45u}) {
    auto g = erdos_renyi_gnm(10, m, m + 7);
    CHECK(g.num_edges() == m);
  }
}

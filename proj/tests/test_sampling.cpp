#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <map>
#include <set>

#include "oracles.hpp"
#include "socgen/error.hpp"
#include "socgen/sampling.hpp"

using namespace socgen;

namespace {

AttributedGraph k4() { return make_graph(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}); }

std::set<Edge> as_set(const std::vector<Edge>& e) { return {e.begin(), e.end()}; }

}  // namespace

TEST_CASE("node split edge classes") {
  auto s = tally_node_split(k4(), {true, true, false, false});
  CHECK(s.train_train == 1);
  CHECK(s.train_test == 4);
  CHECK(s.test_test == 1);

  auto near_all = split_nodes(make_graph(3, {{0, 1}, {1, 2}}), 0.9, 1);
  CHECK(near_all.train_train == 2);
  CHECK_THROWS_AS(split_nodes(k4(), 1.0, 1), Error);
  CHECK_THROWS_AS(split_nodes(k4(), 0.0, 1), Error);

  Rng rng(12);
  auto g = oracle::random_graph(100, 0.1, rng);
  double mean_tt = 0;
  const int seeds = 200;
  for (int sd = 0; sd < seeds; ++sd) {
    auto sp = split_nodes(g, 0.8, static_cast<std::uint64_t>(sd));
    CHECK(sp.train_nodes.size() == 80);
    std::size_t tt = 0, tx = 0, xx = 0;
    for (const auto& e : g.edges()) {
      const bool a = std::binary_search(sp.train_nodes.begin(), sp.train_nodes.end(), e.src);
      const bool b = std::binary_search(sp.train_nodes.begin(), sp.train_nodes.end(), e.dst);
      (a && b ? tt : (a || b) ? tx : xx)++;
    }
    CHECK(sp.train_train == tt);
    CHECK(sp.train_test == tx);
    CHECK(sp.test_test == xx);
    const auto f = sp.fractions();
    CHECK(f[0] + f[1] + f[2] == doctest::Approx(1.0));
    mean_tt += f[0] / seeds;
  }
  // sampling without replacement: (80/100)(79/99)
  CHECK(mean_tt == doctest::Approx(80.0 * 79 / (100.0 * 99)).epsilon(0.01));
}

TEST_CASE("edge split") {
  std::vector<Edge> e;
  for (NodeId i = 0; i < 10; ++i) e.push_back({i, static_cast<NodeId>(i + 1)});
  auto g = make_graph(11, e);
  auto s = split_edges(g, 0.5, 3);
  CHECK(s.train_edges.size() == 5);
  CHECK(s.test_edges.size() == 5);
  auto again = split_edges(g, 0.5, 3);
  CHECK(again.train_edges == s.train_edges);
  std::set<Edge> all = as_set(s.train_edges);
  all.insert(s.test_edges.begin(), s.test_edges.end());
  CHECK(all.size() == 10);

  std::map<Edge, int> in_train;
  const int seeds = 1000;
  for (int sd = 0; sd < seeds; ++sd)
    for (const auto& te : split_edges(g, 0.5, static_cast<std::uint64_t>(sd) + 50).train_edges) in_train[te]++;
  const double sigma = std::sqrt(seeds * 0.25);
  for (const auto& [edge, c] : in_train) CHECK(std::abs(c - seeds * 0.5) < 3 * sigma);
}

TEST_CASE("random walk batches") {
  Rng rng(4);
  auto g = oracle::random_graph(30, 0.1, rng);
  auto zero = random_walk_batch(g, 7, 0, 5);
  CHECK(zero.nodes == zero.seeds);
  CHECK(zero.nodes.size() == 7);

  auto path = make_graph(3, {{0, 1}, {1, 2}});
  for (std::uint64_t sd = 0; sd < 20; ++sd) {
    // one root: with seed search, force root 1
    auto b = random_walk_batch(path, 1, 1, sd);
    if (b.seeds[0] != 1) continue;
    CHECK(b.nodes.size() == 2);
  }

  // visit frequencies against an independent simulation of the same walk law
  auto g10 = oracle::random_graph(10, 0.3, rng);
  std::vector<double> freq(10, 0), expect(10, 0);
  const int reps = 20000;
  for (int r = 0; r < reps; ++r)
    for (NodeId v : random_walk_batch(g10, 1, 3, static_cast<std::uint64_t>(r)).nodes) freq[v] += 1.0 / reps;
  // exact visit probabilities by dynamic programming over walk states
  auto a = oracle::adjacency(g10);
  for (NodeId target = 0; target < 10; ++target) {
    // probability a walk from root r of 3 steps ever hits target
    double total = 0;
    for (int root = 0; root < 10; ++root) {
      std::vector<double> miss(10, 0);  // mass at each node having not yet visited target
      if (root == static_cast<int>(target)) {
        total += 0.1;
        continue;
      }
      miss[root] = 1;
      for (int step = 0; step < 3; ++step) {
        std::vector<double> next(10, 0);
        for (int v = 0; v < 10; ++v) {
          const double d = a.row(v).sum();
          if (d == 0) {
            next[v] += miss[v];
            continue;
          }
          for (int u = 0; u < 10; ++u)
            if (a(v, u) > 0 && u != static_cast<int>(target)) next[u] += miss[v] / d;
        }
        miss = next;
      }
      double stay = 0;
      for (double m : miss) stay += m;
      total += 0.1 * (1 - stay);
    }
    expect[target] = total;
  }
  for (int v = 0; v < 10; ++v) {
    const double sigma = std::sqrt(expect[v] * (1 - expect[v]) / reps);
    CHECK(std::abs(freq[v] - expect[v]) <= 3 * sigma + 1e-12);
  }
  for (const auto& e : random_walk_batch(g, 5, 4, 1).edges) CHECK(g.has_edge(e.src, e.dst));
}

TEST_CASE("negative edges") {
  CHECK_THROWS_AS(sample_negative_edges(k4(), 1, 1), Error);
  auto path = make_graph(3, {{0, 1}, {1, 2}});
  auto one = sample_negative_edges(path, 1, 9);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == Edge{0, 2});

  Rng rng(15);
  auto g = oracle::random_graph(20, 0.1, rng);
  std::map<Edge, int> count;
  const int draws = 10000;
  for (int d = 0; d < draws; ++d) count[sample_negative_edges(g, 1, rng)[0]]++;
  const double cells = static_cast<double>(pair_capacity(20) - g.num_edges());
  for (const auto& [e, c] : count) CHECK(!g.has_edge(e.src, e.dst));
  CHECK(count.size() == static_cast<std::size_t>(cells));
  // chi-square goodness of fit against the uniform law
  const double expected = draws / cells;
  double chi2 = 0;
  for (const auto& [e, c] : count) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < boost::math::quantile(boost::math::chi_squared(cells - 1), 0.99));

  // dense graphs switch to enumeration and honour the exclusion set
  auto dense = oracle::random_graph(12, 0.8, rng);
  std::unordered_set<std::uint64_t> ex;
  auto neg = sample_negative_edges(dense, 5, 2);
  ex.insert(pair_key(neg[0].src, neg[0].dst));
  for (const auto& e : sample_negative_edges(dense, 4, 3, ex)) {
    CHECK(!dense.has_edge(e.src, e.dst));
    CHECK(ex.count(pair_key(e.src, e.dst)) == 0);
  }
}

TEST_CASE("ego and snowball samples") {
  auto tri = make_graph(3, {{0, 1}, {1, 2}, {0, 2}});
  std::vector<NodeId> seed{0};
  auto star = star_sample(tri, seed);
  CHECK(star.nodes.size() == 3);
  CHECK(star.edges.size() == 2);
  CHECK(neighborhood_sample(tri, seed).edges.size() == 3);
  auto iso = make_graph(3, {{1, 2}});
  CHECK(star_sample(iso, seed).nodes.size() == 1);
  CHECK(neighborhood_sample(iso, seed).edges.empty());

  auto p5 = make_graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
  std::vector<NodeId> mid{2};
  CHECK(snowball_sample(p5, mid, 0).nodes == mid);
  CHECK(snowball_sample(p5, mid, 1).nodes.size() == 3);

  Rng rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    auto g = oracle::random_graph(30, 0.08, rng);
    std::vector<NodeId> seeds{static_cast<NodeId>(rng.index(30)), static_cast<NodeId>(rng.index(30))};
    auto s = star_sample(g, seeds), n = neighborhood_sample(g, seeds);
    auto se = as_set(s.edges), ne = as_set(n.edges);
    CHECK(std::includes(ne.begin(), ne.end(), se.begin(), se.end()));
    // star edges are exactly the edges incident to a seed
    std::set<Edge> expect;
    for (const auto& e : g.edges())
      if (std::find(seeds.begin(), seeds.end(), e.src) != seeds.end() ||
          std::find(seeds.begin(), seeds.end(), e.dst) != seeds.end())
        expect.insert(e);
    CHECK(se == expect);
    auto sb = snowball_sample(g, seeds, 100);
    std::size_t total = 0;
    for (auto w : sb.wave_sizes) total += w;
    CHECK(total == sb.nodes.size());
    auto sub = materialize(g, sb);
    CHECK(sub.graph.num_nodes() == sb.nodes.size());
  }

  // geometric wave growth on a sparse random graph before saturation
  auto big = erdos_renyi_gnm(20000, 120000, 3);
  std::vector<NodeId> one{0};
  auto sb = snowball_sample(big, one, 3);
  REQUIRE(sb.wave_sizes.size() == 4);
  CHECK(sb.wave_sizes[2] > 5 * sb.wave_sizes[1]);
  CHECK(sb.wave_sizes[3] > 5 * sb.wave_sizes[2]);
}

#include "socgen/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "socgen/error.hpp"

namespace socgen {

namespace {

void check_frac(double f) {
  if (!(f > 0.0 && f < 1.0)) fail(Errc::kValueError, "train fraction must lie in (0, 1)");
}

std::vector<NodeId> unique_seeds(const AttributedGraph& graph, std::span<const NodeId> seeds) {
  std::vector<NodeId> out;
  std::vector<char> seen(graph.num_nodes(), 0);
  for (NodeId s : seeds) {
    if (s >= graph.num_nodes()) fail(Errc::kIndexError, "seed " + std::to_string(s) + " out of range");
    if (!seen[s]) {
      seen[s] = 1;
      out.push_back(s);
    }
  }
  return out;
}

std::vector<Edge> induced_edges(const AttributedGraph& graph, std::span<const NodeId> nodes) {
  std::vector<char> member(graph.num_nodes(), 0);
  for (NodeId v : nodes) member[v] = 1;
  std::vector<Edge> edges;
  for (NodeId v : nodes)
    for (NodeId u : graph.neighbors(v))
      if (v < u && member[u]) edges.push_back({v, u});
  std::sort(edges.begin(), edges.end());
  return edges;
}

}  // namespace

std::array<double, 3> NodeSplit::fractions() const {
  const double m = static_cast<double>(train_train + train_test + test_test);
  if (m == 0.0) return {0.0, 0.0, 0.0};
  return {static_cast<double>(train_train) / m, static_cast<double>(train_test) / m,
          static_cast<double>(test_test) / m};
}

NodeSplit tally_node_split(const AttributedGraph& graph, std::vector<bool> in_train) {
  if (in_train.size() != graph.num_nodes()) fail(Errc::kDimensionError, "membership length mismatch");
  NodeSplit s;
  s.in_train = std::move(in_train);
  for (NodeId v = 0; v < graph.num_nodes(); ++v) (s.in_train[v] ? s.train_nodes : s.test_nodes).push_back(v);
  for (const auto& e : graph.edges()) {
    const int k = static_cast<int>(s.in_train[e.src]) + static_cast<int>(s.in_train[e.dst]);
    if (k == 2) {
      ++s.train_train;
    } else if (k == 1) {
      ++s.train_test;
    } else {
      ++s.test_test;
    }
  }
  return s;
}

NodeSplit split_nodes(const AttributedGraph& graph, double train_frac, std::uint64_t seed) {
  check_frac(train_frac);
  Rng rng(seed);
  const std::size_t n = graph.num_nodes();
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), NodeId{0});
  rng.shuffle(order.begin(), order.end());
  const auto n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(n)));
  std::vector<bool> in_train(n, false);
  for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = true;
  return tally_node_split(graph, std::move(in_train));
}

EdgeSplit split_edges(const AttributedGraph& graph, double train_frac, std::uint64_t seed) {
  check_frac(train_frac);
  Rng rng(seed);
  std::vector<Edge> edges = graph.edges();
  rng.shuffle(edges.begin(), edges.end());
  const auto n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(edges.size())));
  EdgeSplit s;
  s.train_edges.assign(edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test_edges.assign(edges.begin() + static_cast<std::ptrdiff_t>(n_train), edges.end());
  std::sort(s.train_edges.begin(), s.train_edges.end());
  std::sort(s.test_edges.begin(), s.test_edges.end());
  return s;
}

std::string sample_kind_name(SampleKind kind) {
  switch (kind) {
    case SampleKind::kStar: return "star";
    case SampleKind::kNeighborhood: return "neighborhood";
    case SampleKind::kSnowball: return "snowball";
    case SampleKind::kRandomWalk: return "random-walk";
  }
  return "unknown";
}

SampleKind parse_sample_kind(const std::string& name) {
  if (name == "star") return SampleKind::kStar;
  if (name == "neighborhood") return SampleKind::kNeighborhood;
  if (name == "snowball") return SampleKind::kSnowball;
  if (name == "random-walk") return SampleKind::kRandomWalk;
  fail(Errc::kValueError, "unknown sample kind '" + name + "'");
}

Subgraph materialize(const AttributedGraph& graph, const SubgraphSample& sample) {
  std::vector<NodeId> local(graph.num_nodes(), static_cast<NodeId>(-1));
  for (std::size_t i = 0; i < sample.nodes.size(); ++i) local[sample.nodes[i]] = static_cast<NodeId>(i);
  std::vector<Edge> edges;
  edges.reserve(sample.edges.size());
  for (const auto& e : sample.edges) edges.push_back(canonical(local[e.src], local[e.dst]));
  // edge features are not carried; samples are structural views
  return Subgraph{AttributedGraph(graph.nodes().select(sample.nodes), EdgeList(std::move(edges))), sample.nodes};
}

std::vector<NodeId> sample_distinct(std::size_t n, std::size_t k, Rng& rng) {
  k = std::min(k, n);
  std::vector<NodeId> out;
  if (2 * k >= n) {
    std::vector<NodeId> all(n);
    std::iota(all.begin(), all.end(), NodeId{0});
    // partial Fisher-Yates
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = i + rng.index(n - i);
      std::swap(all[i], all[j]);
    }
    out.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
  } else {
    std::unordered_set<NodeId> chosen;
    chosen.reserve(2 * k);
    // Floyd's algorithm
    for (std::size_t j = n - k; j < n; ++j) {
      const auto t = static_cast<NodeId>(rng.index(j + 1));
      if (!chosen.insert(t).second) chosen.insert(static_cast<NodeId>(j));
    }
    out.assign(chosen.begin(), chosen.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

SubgraphSample random_walk_batch(const AttributedGraph& graph, std::size_t num_roots, std::size_t walk_length,
                                 std::uint64_t seed) {
  Rng rng(seed);
  return random_walk_batch(graph, num_roots, walk_length, rng);
}

SubgraphSample random_walk_batch(const AttributedGraph& graph, std::size_t num_roots, std::size_t walk_length,
                                 Rng& rng) {
  if (graph.num_nodes() == 0) fail(Errc::kEmptyGraph, "random walk on an empty graph");
  SubgraphSample s;
  s.kind = SampleKind::kRandomWalk;
  s.seeds = sample_distinct(graph.num_nodes(), num_roots, rng);
  std::vector<char> visited(graph.num_nodes(), 0);
  for (NodeId root : s.seeds) {
    NodeId at = root;
    visited[at] = 1;
    for (std::size_t step = 0; step < walk_length; ++step) {
      const auto nb = graph.neighbors(at);
      if (nb.empty()) break;
      at = nb[rng.index(nb.size())];
      visited[at] = 1;
    }
  }
  for (NodeId v = 0; v < graph.num_nodes(); ++v)
    if (visited[v]) s.nodes.push_back(v);
  s.edges = induced_edges(graph, s.nodes);
  s.wave_sizes = {s.nodes.size()};
  return s;
}

std::vector<Edge> sample_allowed_pairs(std::size_t n, std::size_t count, Rng& rng,
                                       const std::function<bool(NodeId, NodeId)>& forbidden,
                                       std::uint64_t forbidden_count) {
  const std::uint64_t capacity = pair_capacity(n);
  const std::uint64_t allowed = capacity >= forbidden_count ? capacity - forbidden_count : 0;
  if (count > allowed)
    fail(Errc::kCapacityError, "requested " + std::to_string(count) + " pairs but only " +
                                   std::to_string(allowed) + " are available");
  std::vector<Edge> out;
  if (count == 0) return out;
  out.reserve(count);
  if (2 * forbidden_count <= capacity) {
    std::unordered_set<std::uint64_t> taken;
    taken.reserve(2 * count);
    while (out.size() < count) {
      const auto a = static_cast<NodeId>(rng.index(n));
      const auto b = static_cast<NodeId>(rng.index(n));
      if (a == b || forbidden(a, b)) continue;
      if (!taken.insert(pair_key(a, b)).second) continue;
      out.push_back(canonical(a, b));
    }
  } else {
    std::vector<Edge> candidates;
    candidates.reserve(allowed);
    for (NodeId a = 0; a < n; ++a)
      for (NodeId b = a + 1; b < n; ++b)
        if (!forbidden(a, b)) candidates.push_back({a, b});
    const auto pick = sample_distinct(candidates.size(), count, rng);
    for (NodeId i : pick) out.push_back(candidates[i]);
    rng.shuffle(out.begin(), out.end());
  }
  return out;
}

std::vector<Edge> sample_negative_edges(const AttributedGraph& graph, std::size_t count, std::uint64_t seed,
                                        const std::unordered_set<std::uint64_t>& exclude) {
  Rng rng(seed);
  return sample_negative_edges(graph, count, rng, exclude);
}

std::vector<Edge> sample_negative_edges(const AttributedGraph& graph, std::size_t count, Rng& rng,
                                        const std::unordered_set<std::uint64_t>& exclude) {
  std::uint64_t forbidden = graph.num_edges();
  for (auto key : exclude) {
    const Edge e = key_edge(key);
    if (e.src != e.dst && e.dst < graph.num_nodes() && !graph.has_edge(e.src, e.dst)) ++forbidden;
  }
  return sample_allowed_pairs(
      graph.num_nodes(), count, rng,
      [&](NodeId a, NodeId b) { return graph.has_edge(a, b) || exclude.count(pair_key(a, b)) > 0; }, forbidden);
}

namespace {

SubgraphSample ego_sample(const AttributedGraph& graph, std::span<const NodeId> seeds, SampleKind kind) {
  SubgraphSample s;
  s.kind = kind;
  s.seeds = unique_seeds(graph, seeds);
  std::vector<char> is_seed(graph.num_nodes(), 0), member(graph.num_nodes(), 0);
  for (NodeId v : s.seeds) is_seed[v] = member[v] = 1;
  std::vector<NodeId> alters;
  for (NodeId v : s.seeds)
    for (NodeId u : graph.neighbors(v))
      if (!member[u]) {
        member[u] = 1;
        alters.push_back(u);
      }
  std::sort(alters.begin(), alters.end());
  s.nodes = s.seeds;
  s.nodes.insert(s.nodes.end(), alters.begin(), alters.end());
  s.wave_sizes = {s.seeds.size(), alters.size()};
  if (kind == SampleKind::kStar) {
    for (NodeId v : s.nodes)
      for (NodeId u : graph.neighbors(v))
        if (v < u && member[u] && (is_seed[v] || is_seed[u])) s.edges.push_back({v, u});
    std::sort(s.edges.begin(), s.edges.end());
  } else {
    s.edges = induced_edges(graph, s.nodes);
  }
  return s;
}

}  // namespace

SubgraphSample star_sample(const AttributedGraph& graph, std::span<const NodeId> seeds) {
  return ego_sample(graph, seeds, SampleKind::kStar);
}

SubgraphSample neighborhood_sample(const AttributedGraph& graph, std::span<const NodeId> seeds) {
  return ego_sample(graph, seeds, SampleKind::kNeighborhood);
}

SubgraphSample snowball_sample(const AttributedGraph& graph, std::span<const NodeId> seeds, std::size_t waves) {
  SubgraphSample s;
  s.kind = SampleKind::kSnowball;
  s.seeds = unique_seeds(graph, seeds);
  std::vector<char> member(graph.num_nodes(), 0);
  for (NodeId v : s.seeds) member[v] = 1;
  std::vector<NodeId> frontier = s.seeds;
  s.nodes = s.seeds;
  s.wave_sizes = {s.seeds.size()};
  for (std::size_t w = 1; w <= waves && !frontier.empty(); ++w) {
    std::vector<NodeId> next;
    for (NodeId v : frontier)
      for (NodeId u : graph.neighbors(v))
        if (!member[u]) {
          member[u] = 1;
          next.push_back(u);
        }
    std::sort(next.begin(), next.end());
    if (next.empty()) break;
    s.nodes.insert(s.nodes.end(), next.begin(), next.end());
    s.wave_sizes.push_back(next.size());
    frontier = std::move(next);
  }
  s.edges = induced_edges(graph, s.nodes);
  return s;
}

}  // namespace socgen

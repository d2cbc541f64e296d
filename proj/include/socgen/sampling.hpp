#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "socgen/graph.hpp"

namespace socgen {

struct NodeSplit {
  std::vector<NodeId> train_nodes;  // sorted
  std::vector<NodeId> test_nodes;   // sorted
  std::vector<bool> in_train;
  std::size_t train_train = 0;
  std::size_t train_test = 0;  // discarded for training and testing
  std::size_t test_test = 0;

  /// (train-train, train-test, test-test) fractions of all edges.
  std::array<double, 3> fractions() const;
};

/// Uniform node partition with round(train_frac * N) training nodes.
NodeSplit split_nodes(const AttributedGraph& graph, double train_frac, std::uint64_t seed);

/// Tallies edge classes for a given membership vector.
NodeSplit tally_node_split(const AttributedGraph& graph, std::vector<bool> in_train);

struct EdgeSplit {
  std::vector<Edge> train_edges;
  std::vector<Edge> test_edges;
};

/// Uniform edge partition with round(train_frac * M) training edges.
EdgeSplit split_edges(const AttributedGraph& graph, double train_frac, std::uint64_t seed);

enum class SampleKind { kStar, kNeighborhood, kSnowball, kRandomWalk };

std::string sample_kind_name(SampleKind kind);
SampleKind parse_sample_kind(const std::string& name);

struct SubgraphSample {
  SampleKind kind = SampleKind::kNeighborhood;
  std::vector<NodeId> seeds;
  std::vector<NodeId> nodes;       // parent ids, wave by wave for snowball
  std::vector<Edge> edges;         // parent ids, canonical
  std::vector<std::size_t> wave_sizes;
};

/// Subgraph over sample.nodes (local ids in that order) with the sample's edges.
Subgraph materialize(const AttributedGraph& graph, const SubgraphSample& sample);

/// k distinct values from [0, n), uniformly, in sorted order.
std::vector<NodeId> sample_distinct(std::size_t n, std::size_t k, Rng& rng);

/// GraphSAINT-style batch: num_roots distinct uniform roots (all nodes if
/// num_roots >= N), one simple random walk of walk_length steps per root, batch
/// = visited nodes (sorted) with their induced edges. An isolated walker stays put.
SubgraphSample random_walk_batch(const AttributedGraph& graph, std::size_t num_roots, std::size_t walk_length,
                                 std::uint64_t seed);
SubgraphSample random_walk_batch(const AttributedGraph& graph, std::size_t num_roots, std::size_t walk_length,
                                 Rng& rng);

/// Uniform distinct unordered pairs for which `forbidden` is false. Rejection
/// sampling when forbidden pairs are at most half of all pairs, enumeration
/// otherwise. CapacityError when fewer than `count` pairs are allowed.
std::vector<Edge> sample_allowed_pairs(std::size_t n, std::size_t count, Rng& rng,
                                       const std::function<bool(NodeId, NodeId)>& forbidden,
                                       std::uint64_t forbidden_count);

/// Uniform non-edges of graph that are not in `exclude` (pair keys).
std::vector<Edge> sample_negative_edges(const AttributedGraph& graph, std::size_t count, std::uint64_t seed,
                                        const std::unordered_set<std::uint64_t>& exclude = {});
std::vector<Edge> sample_negative_edges(const AttributedGraph& graph, std::size_t count, Rng& rng,
                                        const std::unordered_set<std::uint64_t>& exclude = {});

/// Seeds plus their alters; only seed-alter edges.
SubgraphSample star_sample(const AttributedGraph& graph, std::span<const NodeId> seeds);

/// Seeds plus their alters with all ties among them.
SubgraphSample neighborhood_sample(const AttributedGraph& graph, std::span<const NodeId> seeds);

/// Wave 0 = seeds, wave w = unseen neighbors of wave w-1; induced edges.
SubgraphSample snowball_sample(const AttributedGraph& graph, std::span<const NodeId> seeds, std::size_t waves);

}  // namespace socgen

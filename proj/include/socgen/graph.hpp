#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "socgen/rng.hpp"

namespace socgen {

using NodeId = std::uint32_t;

/// Undirected edge. Stored canonically with src < dst.
struct Edge {
  NodeId src = 0;
  NodeId dst = 0;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

inline Edge canonical(NodeId a, NodeId b) { return a < b ? Edge{a, b} : Edge{b, a}; }

/// 64-bit key of the unordered pair {a, b}.
inline std::uint64_t pair_key(NodeId a, NodeId b) {
  const Edge e = canonical(a, b);
  return (static_cast<std::uint64_t>(e.src) << 32) | e.dst;
}

inline Edge key_edge(std::uint64_t key) {
  return Edge{static_cast<NodeId>(key >> 32), static_cast<NodeId>(key & 0xffffffffULL)};
}

// ---------------------------------------------------------------------------
// Feature schema

struct CategoricalKind {
  std::vector<std::string> levels;
  friend bool operator==(const CategoricalKind&, const CategoricalKind&) = default;
};

struct ContinuousKind {
  double min = 0.0;
  double max = 1.0;
  friend bool operator==(const ContinuousKind&, const ContinuousKind&) = default;
};

struct Column {
  std::string name;
  std::variant<CategoricalKind, ContinuousKind> kind;

  bool categorical() const { return std::holds_alternative<CategoricalKind>(kind); }
  const std::vector<std::string>& levels() const;  // SchemaError for continuous
  const ContinuousKind& range() const;             // SchemaError for categorical
  std::size_t level_count() const { return categorical() ? levels().size() : 0; }
  std::optional<std::size_t> level_index(const std::string& level) const;

  friend bool operator==(const Column&, const Column&) = default;
};

Column categorical_column(std::string name, std::vector<std::string> levels);
Column continuous_column(std::string name, double min, double max);

class FeatureSchema {
 public:
  FeatureSchema() = default;
  /// Throws SchemaError on duplicate names, duplicate levels or min > max.
  explicit FeatureSchema(std::vector<Column> columns);

  std::size_t size() const { return columns_.size(); }
  bool empty() const { return columns_.empty(); }
  const Column& column(std::size_t c) const { return columns_.at(c); }
  const std::vector<Column>& columns() const { return columns_; }
  std::optional<std::size_t> find(const std::string& name) const;
  /// Index of the named column or SchemaError.
  std::size_t require(const std::string& name) const;

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;

 private:
  std::vector<Column> columns_;
};

// ---------------------------------------------------------------------------
// Node table: n rows by F columns, row-major. Categorical cells hold the level
// index; a NaN cell marks a missing value (only legal where a caller allows it).

class NodeTable {
 public:
  NodeTable() = default;
  /// All cells default to level 0 / the column minimum.
  NodeTable(FeatureSchema schema, std::size_t rows);
  NodeTable(FeatureSchema schema, std::size_t rows, std::vector<double> values, bool allow_missing = false);

  const FeatureSchema& schema() const { return schema_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return schema_.size(); }

  double at(std::size_t row, std::size_t col) const { return values_[row * cols() + col]; }
  void set(std::size_t row, std::size_t col, double value) { values_[row * cols() + col] = value; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols(), cols()}; }
  const std::vector<double>& values() const { return values_; }

  static bool is_missing(double v);
  bool has_missing() const;
  void validate(bool allow_missing = false) const;

  /// Rows in the given order.
  NodeTable select(std::span<const NodeId> rows) const;

  friend bool operator==(const NodeTable& a, const NodeTable& b);

 private:
  FeatureSchema schema_;
  std::size_t rows_ = 0;
  std::vector<double> values_;
};

// ---------------------------------------------------------------------------

struct EdgeList {
  std::vector<Edge> edges;
  FeatureSchema edge_schema;       // may be empty
  std::vector<double> edge_values; // edges.size() x edge_schema.size(), row-major

  EdgeList() = default;
  explicit EdgeList(std::vector<Edge> e) : edges(std::move(e)) {}
};

/// Simple undirected attributed graph, immutable after construction.
class AttributedGraph {
 public:
  AttributedGraph() = default;
  /// Canonicalizes edges; throws IndexError, SelfLoop or DuplicateEdge.
  AttributedGraph(NodeTable nodes, EdgeList edges);

  std::size_t num_nodes() const { return nodes_.rows(); }
  std::size_t num_edges() const { return edges_.edges.size(); }

  const NodeTable& nodes() const { return nodes_; }
  const EdgeList& edge_list() const { return edges_; }
  const std::vector<Edge>& edges() const { return edges_.edges; }

  /// Sorted neighbor ids. No range check.
  std::span<const NodeId> neighbors(NodeId v) const {
    return {adjacency_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
  }
  std::size_t degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }
  bool has_edge(NodeId a, NodeId b) const;

  friend bool operator==(const AttributedGraph& a, const AttributedGraph& b);

 private:
  NodeTable nodes_;
  EdgeList edges_;
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> adjacency_;
};

AttributedGraph build_graph(NodeTable nodes, EdgeList edges);

/// Structure-only graph over n nodes with an empty schema.
AttributedGraph make_graph(std::size_t n, std::vector<Edge> edges);

/// |N(node)|; IndexError when out of range.
std::size_t degree(const AttributedGraph& graph, NodeId node);

struct Subgraph {
  AttributedGraph graph;
  std::vector<NodeId> original_ids;  // local id -> id in the parent graph
};

/// Induced subgraph on `nodes` (unique ids); local ids follow the given order.
Subgraph induced_subgraph(const AttributedGraph& graph, std::span<const NodeId> nodes);

/// Nodes within distance <= k of root, in BFS order.
std::vector<NodeId> nodes_within(const AttributedGraph& graph, NodeId root, std::size_t k);

Subgraph neighborhood_subgraph(const AttributedGraph& graph, NodeId root, std::size_t k);

// ---------------------------------------------------------------------------

/// Bijection on {0..n-1}; node i is relabeled to map(i).
class Permutation {
 public:
  explicit Permutation(std::vector<NodeId> mapping);  // ValueError if not a bijection
  static Permutation identity(std::size_t n);
  static Permutation random(std::size_t n, Rng& rng);

  std::size_t size() const { return map_.size(); }
  NodeId operator()(NodeId i) const { return map_[i]; }
  const std::vector<NodeId>& mapping() const { return map_; }
  Permutation inverse() const;

 private:
  std::vector<NodeId> map_;
};

/// Node i becomes node perm(i): rows move with their nodes and every edge
/// (i, j) becomes (perm(i), perm(j)). Edge order is kept.
AttributedGraph apply_permutation(const AttributedGraph& graph, const Permutation& perm);

/// Number of unordered pairs n(n-1)/2.
inline std::uint64_t pair_capacity(std::uint64_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

/// m distinct pairs drawn uniformly without replacement, sorted.
std::vector<Edge> sample_gnm_edges(std::size_t n, std::size_t m, Rng& rng);

/// G(n, m) over a structure-only node table. CapacityError when m > n(n-1)/2.
AttributedGraph erdos_renyi_gnm(std::size_t n, std::size_t m, std::uint64_t seed);

/// G(n, m) over the given population.
AttributedGraph erdos_renyi_gnm(NodeTable nodes, std::size_t m, std::uint64_t seed);

}  // namespace socgen

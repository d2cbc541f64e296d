#include "socgen/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <unordered_set>

#include "socgen/error.hpp"

namespace socgen {

const std::vector<std::string>& Column::levels() const {
  if (!categorical()) fail(Errc::kSchemaError, "column '" + name + "' is not categorical");
  return std::get<CategoricalKind>(kind).levels;
}

const ContinuousKind& Column::range() const {
  if (categorical()) fail(Errc::kSchemaError, "column '" + name + "' is not continuous");
  return std::get<ContinuousKind>(kind);
}

std::optional<std::size_t> Column::level_index(const std::string& level) const {
  const auto& lv = levels();
  const auto it = std::find(lv.begin(), lv.end(), level);
  if (it == lv.end()) return std::nullopt;
  return static_cast<std::size_t>(it - lv.begin());
}

Column categorical_column(std::string name, std::vector<std::string> levels) {
  return Column{std::move(name), CategoricalKind{std::move(levels)}};
}

Column continuous_column(std::string name, double min, double max) {
  return Column{std::move(name), ContinuousKind{min, max}};
}

FeatureSchema::FeatureSchema(std::vector<Column> columns) : columns_(std::move(columns)) {
  std::unordered_set<std::string> names;
  for (const auto& col : columns_) {
    if (col.name.empty()) fail(Errc::kSchemaError, "empty column name");
    if (!names.insert(col.name).second) fail(Errc::kSchemaError, "duplicate column '" + col.name + "'");
    if (col.categorical()) {
      const auto& lv = col.levels();
      if (lv.empty()) fail(Errc::kSchemaError, "column '" + col.name + "' has no levels");
      std::unordered_set<std::string> seen(lv.begin(), lv.end());
      if (seen.size() != lv.size()) fail(Errc::kSchemaError, "duplicate level in column '" + col.name + "'");
    } else {
      const auto& r = col.range();
      if (!(r.min <= r.max)) fail(Errc::kSchemaError, "column '" + col.name + "' has min > max");
    }
  }
}

std::optional<std::size_t> FeatureSchema::find(const std::string& name) const {
  for (std::size_t c = 0; c < columns_.size(); ++c)
    if (columns_[c].name == name) return c;
  return std::nullopt;
}

std::size_t FeatureSchema::require(const std::string& name) const {
  auto c = find(name);
  if (!c) fail(Errc::kSchemaError, "unknown column '" + name + "'");
  return *c;
}

// ---------------------------------------------------------------------------

NodeTable::NodeTable(FeatureSchema schema, std::size_t rows)
    : schema_(std::move(schema)), rows_(rows), values_(rows * schema_.size(), 0.0) {
  for (std::size_t c = 0; c < cols(); ++c) {
    const auto& col = schema_.column(c);
    if (!col.categorical())
      for (std::size_t r = 0; r < rows_; ++r) set(r, c, col.range().min);
  }
}

NodeTable::NodeTable(FeatureSchema schema, std::size_t rows, std::vector<double> values, bool allow_missing)
    : schema_(std::move(schema)), rows_(rows), values_(std::move(values)) {
  if (values_.size() != rows_ * schema_.size())
    fail(Errc::kDimensionError, "node table value count does not match rows x columns");
  validate(allow_missing);
}

bool NodeTable::is_missing(double v) { return std::isnan(v); }

bool NodeTable::has_missing() const {
  return std::any_of(values_.begin(), values_.end(), [](double v) { return is_missing(v); });
}

void NodeTable::validate(bool allow_missing) const {
  for (std::size_t c = 0; c < cols(); ++c) {
    const auto& col = schema_.column(c);
    for (std::size_t r = 0; r < rows_; ++r) {
      const double v = at(r, c);
      if (is_missing(v)) {
        if (!allow_missing)
          fail(Errc::kSchemaError, "missing value in column '" + col.name + "' row " + std::to_string(r));
        continue;
      }
      if (col.categorical()) {
        if (v < 0 || v != std::floor(v) || v >= static_cast<double>(col.level_count()))
          fail(Errc::kSchemaError, "invalid level index in column '" + col.name + "' row " + std::to_string(r));
      } else if (v < col.range().min || v > col.range().max) {
        fail(Errc::kSchemaError, "value out of bounds in column '" + col.name + "' row " + std::to_string(r));
      }
    }
  }
}

NodeTable NodeTable::select(std::span<const NodeId> rows) const {
  NodeTable out;
  out.schema_ = schema_;
  out.rows_ = rows.size();
  out.values_.reserve(rows.size() * cols());
  for (NodeId r : rows) {
    const auto src = row(r);
    out.values_.insert(out.values_.end(), src.begin(), src.end());
  }
  return out;
}

bool operator==(const NodeTable& a, const NodeTable& b) {
  if (!(a.schema_ == b.schema_) || a.rows_ != b.rows_) return false;
  for (std::size_t i = 0; i < a.values_.size(); ++i) {
    const double x = a.values_[i], y = b.values_[i];
    if (!(x == y || (std::isnan(x) && std::isnan(y)))) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

AttributedGraph::AttributedGraph(NodeTable nodes, EdgeList edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  const std::size_t n = nodes_.rows();
  const std::size_t ef = edges_.edge_schema.size();
  if (edges_.edge_values.size() != edges_.edges.size() * ef)
    fail(Errc::kDimensionError, "edge feature rows do not match edge count");

  std::vector<std::uint64_t> keys;
  keys.reserve(edges_.edges.size());
  for (auto& e : edges_.edges) {
    if (e.src >= n || e.dst >= n)
      fail(Errc::kIndexError, "edge endpoint out of range: (" + std::to_string(e.src) + "," +
                                   std::to_string(e.dst) + ") with n=" + std::to_string(n));
    if (e.src == e.dst) fail(Errc::kSelfLoop, "self-loop at node " + std::to_string(e.src));
    e = canonical(e.src, e.dst);
    keys.push_back(pair_key(e.src, e.dst));
  }
  std::sort(keys.begin(), keys.end());
  if (auto it = std::adjacent_find(keys.begin(), keys.end()); it != keys.end()) {
    const Edge d = key_edge(*it);
    fail(Errc::kDuplicateEdge, "duplicate edge (" + std::to_string(d.src) + "," + std::to_string(d.dst) + ")");
  }

  offsets_.assign(n + 1, 0);
  for (const auto& e : edges_.edges) {
    ++offsets_[e.src + 1];
    ++offsets_[e.dst + 1];
  }
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
  adjacency_.resize(2 * edges_.edges.size());
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (const auto& e : edges_.edges) {
    adjacency_[fill[e.src]++] = e.dst;
    adjacency_[fill[e.dst]++] = e.src;
  }
  for (std::size_t v = 0; v < n; ++v)
    std::sort(adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[v]),
              adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[v + 1]));
}

bool AttributedGraph::has_edge(NodeId a, NodeId b) const {
  if (a >= num_nodes() || b >= num_nodes()) return false;
  if (degree(a) > degree(b)) std::swap(a, b);
  const auto nb = neighbors(a);
  return std::binary_search(nb.begin(), nb.end(), b);
}

bool operator==(const AttributedGraph& a, const AttributedGraph& b) {
  return a.nodes_ == b.nodes_ && a.edges_.edges == b.edges_.edges &&
         a.edges_.edge_schema == b.edges_.edge_schema && a.edges_.edge_values == b.edges_.edge_values;
}

AttributedGraph build_graph(NodeTable nodes, EdgeList edges) {
  nodes.validate(true);
  return AttributedGraph(std::move(nodes), std::move(edges));
}

AttributedGraph make_graph(std::size_t n, std::vector<Edge> edges) {
  return AttributedGraph(NodeTable(FeatureSchema{}, n), EdgeList(std::move(edges)));
}

std::size_t degree(const AttributedGraph& graph, NodeId node) {
  if (node >= graph.num_nodes()) fail(Errc::kIndexError, "node " + std::to_string(node) + " out of range");
  return graph.degree(node);
}

Subgraph induced_subgraph(const AttributedGraph& graph, std::span<const NodeId> nodes) {
  constexpr NodeId kAbsent = static_cast<NodeId>(-1);
  std::vector<NodeId> local(graph.num_nodes(), kAbsent);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] >= graph.num_nodes()) fail(Errc::kIndexError, "node out of range");
    if (local[nodes[i]] != kAbsent) fail(Errc::kValueError, "duplicate node in subgraph selection");
    local[nodes[i]] = static_cast<NodeId>(i);
  }
  const auto& src = graph.edge_list();
  const std::size_t ef = src.edge_schema.size();
  EdgeList out;
  out.edge_schema = src.edge_schema;
  for (std::size_t k = 0; k < src.edges.size(); ++k) {
    const auto& e = src.edges[k];
    if (local[e.src] == kAbsent || local[e.dst] == kAbsent) continue;
    out.edges.push_back(canonical(local[e.src], local[e.dst]));
    for (std::size_t c = 0; c < ef; ++c) out.edge_values.push_back(src.edge_values[k * ef + c]);
  }
  return Subgraph{AttributedGraph(graph.nodes().select(nodes), std::move(out)),
                  std::vector<NodeId>(nodes.begin(), nodes.end())};
}

std::vector<NodeId> nodes_within(const AttributedGraph& graph, NodeId root, std::size_t k) {
  if (root >= graph.num_nodes()) fail(Errc::kIndexError, "root out of range");
  std::vector<std::size_t> dist(graph.num_nodes(), SIZE_MAX);
  std::vector<NodeId> order{root};
  dist[root] = 0;
  for (std::size_t head = 0; head < order.size(); ++head) {
    const NodeId v = order[head];
    if (dist[v] == k) continue;
    for (NodeId u : graph.neighbors(v)) {
      if (dist[u] != SIZE_MAX) continue;
      dist[u] = dist[v] + 1;
      order.push_back(u);
    }
  }
  return order;
}

Subgraph neighborhood_subgraph(const AttributedGraph& graph, NodeId root, std::size_t k) {
  const auto nodes = nodes_within(graph, root, k);
  return induced_subgraph(graph, nodes);
}

// ---------------------------------------------------------------------------

Permutation::Permutation(std::vector<NodeId> mapping) : map_(std::move(mapping)) {
  std::vector<char> seen(map_.size(), 0);
  for (NodeId v : map_) {
    if (v >= map_.size() || seen[v]) fail(Errc::kValueError, "mapping is not a bijection");
    seen[v] = 1;
  }
}

Permutation Permutation::identity(std::size_t n) {
  std::vector<NodeId> m(n);
  std::iota(m.begin(), m.end(), NodeId{0});
  return Permutation(std::move(m));
}

Permutation Permutation::random(std::size_t n, Rng& rng) {
  std::vector<NodeId> m(n);
  std::iota(m.begin(), m.end(), NodeId{0});
  rng.shuffle(m.begin(), m.end());
  return Permutation(std::move(m));
}

Permutation Permutation::inverse() const {
  std::vector<NodeId> inv(map_.size());
  for (std::size_t i = 0; i < map_.size(); ++i) inv[map_[i]] = static_cast<NodeId>(i);
  return Permutation(std::move(inv));
}

AttributedGraph apply_permutation(const AttributedGraph& graph, const Permutation& perm) {
  if (perm.size() != graph.num_nodes())
    fail(Errc::kDimensionError, "permutation length does not match node count");
  // new row perm(i) holds old row i, so new row r holds old row inverse(r)
  const auto inv = perm.inverse();
  auto nodes = graph.nodes().select(inv.mapping());
  EdgeList edges = graph.edge_list();
  for (auto& e : edges.edges) e = canonical(perm(e.src), perm(e.dst));
  return AttributedGraph(std::move(nodes), std::move(edges));
}

std::vector<Edge> sample_gnm_edges(std::size_t n, std::size_t m, Rng& rng) {
  const std::uint64_t capacity = pair_capacity(n);
  if (m > capacity)
    fail(Errc::kCapacityError, "cannot place " + std::to_string(m) + " edges on " + std::to_string(n) + " nodes");
  const bool complement = m > capacity / 2;
  const std::uint64_t draws = complement ? capacity - m : m;
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(draws * 2);
  while (chosen.size() < draws) {
    const auto a = static_cast<NodeId>(rng.index(n));
    const auto b = static_cast<NodeId>(rng.index(n));
    if (a == b) continue;
    chosen.insert(pair_key(a, b));
  }
  std::vector<Edge> edges;
  edges.reserve(m);
  if (complement) {
    for (NodeId a = 0; a < n; ++a)
      for (NodeId b = a + 1; b < n; ++b)
        if (!chosen.count(pair_key(a, b))) edges.push_back({a, b});
  } else {
    for (auto key : chosen) edges.push_back(key_edge(key));
    std::sort(edges.begin(), edges.end());
  }
  return edges;
}

AttributedGraph erdos_renyi_gnm(std::size_t n, std::size_t m, std::uint64_t seed) {
  return erdos_renyi_gnm(NodeTable(FeatureSchema{}, n), m, seed);
}

AttributedGraph erdos_renyi_gnm(NodeTable nodes, std::size_t m, std::uint64_t seed) {
  Rng rng(seed);
  auto edges = sample_gnm_edges(nodes.rows(), m, rng);
  return AttributedGraph(std::move(nodes), EdgeList(std::move(edges)));
}

}  // namespace socgen

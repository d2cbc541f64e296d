#include "socgen/netstats.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "socgen/error.hpp"
#include "socgen/parallel.hpp"

namespace socgen {

std::size_t DegreeDistribution::count(std::size_t k) const {
  const auto it = counts.find(k);
  return it == counts.end() ? 0 : it->second;
}

double DegreeDistribution::pmf(std::size_t k) const {
  return num_nodes == 0 ? 0.0 : static_cast<double>(count(k)) / static_cast<double>(num_nodes);
}

double DegreeDistribution::ccdf(std::size_t k) const {
  if (num_nodes == 0) return 0.0;
  std::size_t at_least = 0;
  for (auto it = counts.lower_bound(k); it != counts.end(); ++it) at_least += it->second;
  return static_cast<double>(at_least) / static_cast<double>(num_nodes);
}

std::vector<std::size_t> degree_sequence(const AttributedGraph& graph) {
  std::vector<std::size_t> d(graph.num_nodes());
  for (NodeId v = 0; v < graph.num_nodes(); ++v) d[v] = graph.degree(v);
  return d;
}

DegreeDistribution degree_distribution(std::span<const std::size_t> degrees) {
  DegreeDistribution dist;
  dist.num_nodes = degrees.size();
  if (degrees.empty()) return dist;
  std::size_t total = 0;
  for (auto k : degrees) {
    ++dist.counts[k];
    total += k;
  }
  dist.mean = static_cast<double>(total) / static_cast<double>(degrees.size());
  std::vector<std::size_t> sorted(degrees.begin(), degrees.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  dist.median = n % 2 ? static_cast<double>(sorted[n / 2])
                      : 0.5 * static_cast<double>(sorted[n / 2 - 1] + sorted[n / 2]);
  return dist;
}

DegreeDistribution degree_distribution(const AttributedGraph& graph) {
  const auto d = degree_sequence(graph);
  return degree_distribution(d);
}

std::uint64_t count_triangles(const AttributedGraph& graph, unsigned threads) {
  const std::size_t n = graph.num_nodes();
  // orient every edge from lower to higher (degree, id) rank; each triangle is
  // then found exactly once as u -> v -> w with u -> w
  auto before = [&](NodeId a, NodeId b) {
    const auto da = graph.degree(a), db = graph.degree(b);
    return da < db || (da == db && a < b);
  };
  std::vector<std::size_t> offsets(n + 1, 0);
  for (NodeId v = 0; v < n; ++v)
    for (NodeId u : graph.neighbors(v))
      if (before(v, u)) ++offsets[v + 1];
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  std::vector<NodeId> out(offsets[n]);
  for (NodeId v = 0; v < n; ++v) {
    std::size_t pos = offsets[v];
    for (NodeId u : graph.neighbors(v))
      if (before(v, u)) out[pos++] = u;  // neighbors() is sorted, so out lists are sorted
  }

  const unsigned workers = threads == 0 ? thread_count() : threads;
  std::vector<std::uint64_t> partial(std::max(1u, workers), 0);
  parallel_chunks(n, workers, [&](std::size_t lo, std::size_t hi, unsigned w) {
    std::uint64_t local = 0;
    for (std::size_t u = lo; u < hi; ++u) {
      const NodeId* ub = out.data() + offsets[u];
      const NodeId* ue = out.data() + offsets[u + 1];
      for (const NodeId* pv = ub; pv != ue; ++pv) {
        const NodeId* a = ub;
        const NodeId* b = out.data() + offsets[*pv];
        const NodeId* be = out.data() + offsets[*pv + 1];
        while (a != ue && b != be) {
          if (*a < *b) {
            ++a;
          } else if (*b < *a) {
            ++b;
          } else {
            ++local;
            ++a;
            ++b;
          }
        }
      }
    }
    partial[w] = local;
  });
  return std::accumulate(partial.begin(), partial.end(), std::uint64_t{0});
}

Components connected_components(const AttributedGraph& graph) {
  const std::size_t n = graph.num_nodes();
  constexpr auto kUnset = static_cast<std::uint32_t>(-1);
  Components c;
  c.label.assign(n, kUnset);
  std::vector<NodeId> queue;
  for (NodeId s = 0; s < n; ++s) {
    if (c.label[s] != kUnset) continue;
    const auto id = static_cast<std::uint32_t>(c.count++);
    queue.assign(1, s);
    c.label[s] = id;
    for (std::size_t head = 0; head < queue.size(); ++head)
      for (NodeId u : graph.neighbors(queue[head]))
        if (c.label[u] == kUnset) {
          c.label[u] = id;
          queue.push_back(u);
        }
    c.giant = std::max(c.giant, queue.size());
    if (queue.size() == 1) ++c.isolates;
  }
  return c;
}

std::map<std::size_t, double> avg_nearest_neighbor_degree(const AttributedGraph& graph) {
  std::map<std::size_t, std::vector<double>> per_degree;
  for (NodeId v = 0; v < graph.num_nodes(); ++v) {
    const std::size_t k = graph.degree(v);
    if (k == 0) continue;
    std::size_t total = 0;
    for (NodeId u : graph.neighbors(v)) total += graph.degree(u);
    per_degree[k].push_back(static_cast<double>(total) / static_cast<double>(k));
  }
  // summing in sorted order keeps the result independent of node labels
  std::map<std::size_t, double> knn;
  for (auto& [k, values] : per_degree) {
    std::sort(values.begin(), values.end());
    double s = 0.0;
    for (double x : values) s += x;
    knn[k] = s / static_cast<double>(values.size());
  }
  return knn;
}

double MixingMatrix::upper_total() const {
  double t = 0.0;
  for (std::size_t a = 0; a < size(); ++a)
    for (std::size_t b = a; b < size(); ++b) t += at(a, b);
  return t;
}

MixingMatrix mixing_matrix(const AttributedGraph& graph, const std::string& attribute, MixingMode mode) {
  const auto& schema = graph.nodes().schema();
  const std::size_t col = schema.require(attribute);
  const auto& column = schema.column(col);
  if (!column.categorical()) fail(Errc::kTypeError, "mixing matrix needs a categorical attribute: " + attribute);
  if (graph.num_edges() == 0) fail(Errc::kEmptyGraph, "mixing matrix of a graph without edges");

  const std::size_t k = column.level_count();
  MixingMatrix mm;
  mm.attribute = attribute;
  mm.labels = column.levels();
  mm.mode = mode;
  mm.entries.assign(k * k, 0.0);
  mm.empty_rows.assign(k, false);

  auto level = [&](NodeId v) {
    const double x = graph.nodes().at(v, col);
    if (NodeTable::is_missing(x)) fail(Errc::kValueError, "missing value in mixing attribute");
    return static_cast<std::size_t>(x);
  };

  if (mode == MixingMode::kJoint) {
    for (const auto& e : graph.edges()) {
      const auto a = level(e.src), b = level(e.dst);
      mm.entries[std::min(a, b) * k + std::max(a, b)] += 1.0;
    }
    const double m = static_cast<double>(graph.num_edges());
    for (auto& x : mm.entries) x /= m;
  } else {
    for (const auto& e : graph.edges()) {
      const auto a = level(e.src), b = level(e.dst);
      mm.entries[a * k + b] += 1.0;
      mm.entries[b * k + a] += 1.0;
    }
    for (std::size_t a = 0; a < k; ++a) {
      double row = 0.0;
      for (std::size_t b = 0; b < k; ++b) row += mm.entries[a * k + b];
      if (row == 0.0) {
        mm.empty_rows[a] = true;
        continue;
      }
      for (std::size_t b = 0; b < k; ++b) mm.entries[a * k + b] /= row;
    }
  }
  return mm;
}

LaplacianSpectrum laplacian_spectrum(const AttributedGraph& graph, double rel_tolerance, std::size_t max_nodes) {
  const std::size_t n = graph.num_nodes();
  if (n > max_nodes)
    fail(Errc::kCapacityError, "dense Laplacian limited to " + std::to_string(max_nodes) + " nodes");
  LaplacianSpectrum s;
  if (n == 0) return s;
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& e : graph.edges()) {
    lap(e.src, e.dst) -= 1.0;
    lap(e.dst, e.src) -= 1.0;
    lap(e.src, e.src) += 1.0;
    lap(e.dst, e.dst) += 1.0;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap, Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  s.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  const double top = std::max(s.eigenvalues.back(), 0.0);
  s.tolerance = rel_tolerance * (top > 0.0 ? top : 1.0);
  for (double x : s.eigenvalues) {
    if (x < s.tolerance) {
      ++s.zero_count;
    } else if (s.spectral_gap == 0.0) {
      s.spectral_gap = x;
    }
  }
  return s;
}

std::vector<double> diffuse(const AttributedGraph& graph, std::vector<double> x, double step,
                            std::size_t iterations) {
  if (x.size() != graph.num_nodes()) fail(Errc::kDimensionError, "diffusion vector length mismatch");
  std::vector<double> next(x.size());
  for (std::size_t t = 0; t < iterations; ++t) {
    for (NodeId v = 0; v < graph.num_nodes(); ++v) {
      double lx = static_cast<double>(graph.degree(v)) * x[v];
      for (NodeId u : graph.neighbors(v)) lx -= x[u];
      next[v] = x[v] - step * lx;
    }
    x.swap(next);
  }
  return x;
}

PowerLawFit powerlaw_tail_fit(std::span<const std::size_t> degrees, std::size_t k_min) {
  if (k_min < 1) fail(Errc::kValueError, "k_min must be at least 1");
  std::vector<std::size_t> tail;
  for (auto k : degrees)
    if (k >= k_min) tail.push_back(k);
  if (tail.size() < 2) fail(Errc::kInsufficientData, "power-law fit needs at least 2 samples >= k_min");
  std::sort(tail.begin(), tail.end());

  const double shift = static_cast<double>(k_min) - 0.5;
  double log_sum = 0.0;
  for (auto k : tail) log_sum += std::log(static_cast<double>(k) / shift);
  PowerLawFit fit;
  fit.k_min = k_min;
  fit.n_tail = tail.size();
  fit.alpha_hat = 1.0 + static_cast<double>(tail.size()) / log_sum;
  fit.degenerate = tail.front() == tail.back();

  // KS distance between the empirical survival function and the fitted one,
  // P(K >= k) = ((k - 1/2) / (k_min - 1/2))^(1 - alpha), over the observed support
  const double n = static_cast<double>(tail.size());
  double ks = 0.0;
  std::size_t i = 0;
  while (i < tail.size()) {
    std::size_t j = i;
    while (j < tail.size() && tail[j] == tail[i]) ++j;
    const double emp = (n - static_cast<double>(i)) / n;
    const double model = std::pow((static_cast<double>(tail[i]) - 0.5) / shift, 1.0 - fit.alpha_hat);
    ks = std::max(ks, std::abs(emp - model));
    i = j;
  }
  fit.ks_distance = ks;
  return fit;
}

StatsReport stats_report(const AttributedGraph& graph, const std::vector<std::string>& attributes) {
  StatsReport r;
  r.num_nodes = graph.num_nodes();
  r.num_edges = graph.num_edges();
  const auto comps = connected_components(graph);
  r.giant_component = comps.giant;
  r.num_components = comps.count;
  r.isolates = comps.isolates;
  r.triangles = count_triangles(graph);
  r.degrees = degree_distribution(graph);
  r.mean_degree = r.degrees.mean;
  r.median_degree = r.degrees.median;
  r.knn = avg_nearest_neighbor_degree(graph);
  for (const auto& a : attributes) r.mixing.push_back(mixing_matrix(graph, a, MixingMode::kJoint));
  return r;
}

StatsComparison compare_stats(const AttributedGraph& g1, const AttributedGraph& g2,
                              const std::vector<std::string>& attributes) {
  for (const auto& a : attributes) {
    const auto c1 = g1.nodes().schema().find(a);
    const auto c2 = g2.nodes().schema().find(a);
    if (!c1 || !c2) fail(Errc::kSchemaError, "attribute '" + a + "' missing from one graph");
    if (!(g1.nodes().schema().column(*c1) == g2.nodes().schema().column(*c2)))
      fail(Errc::kSchemaError, "attribute '" + a + "' defined differently in the two graphs");
  }
  StatsComparison cmp;
  cmp.first = stats_report(g1, attributes);
  cmp.second = stats_report(g2, attributes);
  const auto& a = cmp.first;
  const auto& b = cmp.second;
  auto d = [](auto x, auto y) { return static_cast<double>(x) - static_cast<double>(y); };
  cmp.deltas = {
      {"num_nodes", d(a.num_nodes, b.num_nodes)},
      {"num_edges", d(a.num_edges, b.num_edges)},
      {"giant_component", d(a.giant_component, b.giant_component)},
      {"num_components", d(a.num_components, b.num_components)},
      {"isolates", d(a.isolates, b.isolates)},
      {"triangles", d(a.triangles, b.triangles)},
      {"mean_degree", a.mean_degree - b.mean_degree},
      {"median_degree", a.median_degree - b.median_degree},
  };
  const std::size_t kmax = std::max(a.degrees.max_degree(), b.degrees.max_degree());
  for (std::size_t k = 0; k <= kmax; ++k)
    cmp.degree_histogram.push_back({k, a.degrees.count(k), b.degrees.count(k)});
  for (std::size_t i = 0; i < a.mixing.size(); ++i) {
    std::vector<double> diff(a.mixing[i].entries.size());
    for (std::size_t j = 0; j < diff.size(); ++j) diff[j] = a.mixing[i].entries[j] - b.mixing[i].entries[j];
    cmp.mixing_deltas.push_back(std::move(diff));
  }
  return cmp;
}

}  // namespace socgen

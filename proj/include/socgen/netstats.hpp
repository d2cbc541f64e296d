#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "socgen/graph.hpp"

namespace socgen {

struct DegreeDistribution {
  std::map<std::size_t, std::size_t> counts;  // degree k -> N_k, only degrees that occur
  std::size_t num_nodes = 0;
  double mean = 0.0;
  double median = 0.0;

  std::size_t max_degree() const { return counts.empty() ? 0 : counts.rbegin()->first; }
  std::size_t count(std::size_t k) const;
  double pmf(std::size_t k) const;
  /// Fraction of nodes with degree >= k.
  double ccdf(std::size_t k) const;
};

DegreeDistribution degree_distribution(const AttributedGraph& graph);
DegreeDistribution degree_distribution(std::span<const std::size_t> degrees);

std::vector<std::size_t> degree_sequence(const AttributedGraph& graph);

/// Triangle count by degree-ordered neighbor intersection. threads == 0 picks
/// the SOCGEN_THREADS environment value (default 1). The result does not
/// depend on the thread count.
std::uint64_t count_triangles(const AttributedGraph& graph, unsigned threads = 0);

struct Components {
  std::vector<std::uint32_t> label;  // component id per node, numbered by first node
  std::size_t count = 0;
  std::size_t giant = 0;
  std::size_t isolates = 0;
};

Components connected_components(const AttributedGraph& graph);

/// k -> k_nn(k), degree-0 nodes excluded.
std::map<std::size_t, double> avg_nearest_neighbor_degree(const AttributedGraph& graph);

enum class MixingMode { kJoint, kConditional };

/// Edge tabulation by the levels of a categorical attribute.
///
/// Joint mode is reported in upper-triangular form: entry (a, a) is the fraction
/// of edges with both endpoints a, entry (a, b) with a < b is the fraction of
/// edges joining a and b (the two half-count orderings folded together). Entries
/// below the diagonal are zero and the total over a <= b is 1.
///
/// Conditional mode: row a is the distribution of neighbor levels seen from
/// endpoints of level a; rows without incident edges are zero and flagged.
struct MixingMatrix {
  std::string attribute;
  std::vector<std::string> labels;
  MixingMode mode = MixingMode::kJoint;
  std::vector<double> entries;  // K x K row-major
  std::vector<bool> empty_rows;

  std::size_t size() const { return labels.size(); }
  double at(std::size_t a, std::size_t b) const { return entries[a * size() + b]; }
  double upper_total() const;
};

MixingMatrix mixing_matrix(const AttributedGraph& graph, const std::string& attribute, MixingMode mode);

struct LaplacianSpectrum {
  std::vector<double> eigenvalues;  // ascending
  double tolerance = 0.0;
  std::size_t zero_count = 0;
  double spectral_gap = 0.0;  // smallest eigenvalue above tolerance, 0 if none
};

/// Spectrum of L = D - A. Zero detection uses rel_tolerance x largest eigenvalue.
LaplacianSpectrum laplacian_spectrum(const AttributedGraph& graph, double rel_tolerance = 1e-8,
                                     std::size_t max_nodes = 2000);

/// Iterates x <- x - step * L x. The sum of x is conserved; on a connected
/// graph with step < 2 / lambda_max the iterate tends to the uniform vector.
std::vector<double> diffuse(const AttributedGraph& graph, std::vector<double> x, double step,
                            std::size_t iterations);

struct PowerLawFit {
  std::size_t k_min = 1;
  double alpha_hat = 0.0;
  std::size_t n_tail = 0;
  double ks_distance = 0.0;
  bool degenerate = false;  // every tail sample equal
};

/// Continuous-approximation MLE with the -1/2 discreteness correction.
PowerLawFit powerlaw_tail_fit(std::span<const std::size_t> degrees, std::size_t k_min);

struct StatsReport {
  std::size_t num_nodes = 0;
  std::size_t num_edges = 0;
  std::size_t giant_component = 0;
  std::size_t num_components = 0;
  std::size_t isolates = 0;
  std::uint64_t triangles = 0;
  double mean_degree = 0.0;
  double median_degree = 0.0;
  DegreeDistribution degrees;
  std::map<std::size_t, double> knn;
  std::vector<MixingMatrix> mixing;
};

StatsReport stats_report(const AttributedGraph& graph, const std::vector<std::string>& attributes = {});

struct StatsComparison {
  StatsReport first;
  StatsReport second;
  std::map<std::string, double> deltas;  // first - second per scalar metric
  struct HistogramRow {
    std::size_t k;
    std::size_t first;
    std::size_t second;
  };
  std::vector<HistogramRow> degree_histogram;  // k = 0..max over both
  std::vector<std::vector<double>> mixing_deltas;  // per attribute, entrywise first - second
};

/// SchemaError when a requested attribute is missing or defined differently.
StatsComparison compare_stats(const AttributedGraph& g1, const AttributedGraph& g2,
                              const std::vector<std::string>& attributes = {});

}  // namespace socgen

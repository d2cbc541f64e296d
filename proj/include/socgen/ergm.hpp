#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "socgen/graph.hpp"
#include "socgen/sampling.hpp"

namespace socgen {

enum class TermType { kEdges, kNodeCov, kNodeMatch, kEsp, kGwesp };

struct Term {
  TermType type = TermType::kEdges;
  std::string attribute;  // nodecov, nodematch
  std::size_t k = 0;      // esp
  double decay = 0.0;     // gwesp

  static Term edges() { return {}; }
  static Term nodecov(std::string attr) { return {TermType::kNodeCov, std::move(attr), 0, 0.0}; }
  static Term nodematch(std::string attr) { return {TermType::kNodeMatch, std::move(attr), 0, 0.0}; }
  static Term esp(std::size_t k) { return {TermType::kEsp, {}, k, 0.0}; }
  static Term gwesp(double decay) { return {TermType::kGwesp, {}, 0, decay}; }
  bool operator==(const Term&) const = default;
};

/// "edges", "nodecov(x)", "nodematch(x)", "esp(k)", "gwesp(tau)".
std::string term_name(const Term& term);
Term parse_term(const std::string& text);

struct ErgmSpec {
  std::vector<Term> terms;

  /// ValueError: no terms, repeated edges term, gwesp decay <= 0.
  /// SchemaError: unknown attribute, or a nodecov column that is neither
  /// continuous nor a two-level categorical (encoded as its level index).
  void validate(const FeatureSchema& schema) const;
  bool dyad_independent() const;
};

/// Terms joined by '+', e.g. "edges + nodematch(group) + gwesp(0.5)".
ErgmSpec parse_ergm_spec(const std::string& text);

/// f(G). Esp(k) counts edges with exactly k shared partners; gwesp is
/// e^tau * sum_{k>=1} (1 - (1 - e^-tau)^k) EP_k. ValueError when a used
/// attribute has missing cells.
std::vector<double> sufficient_statistics(const AttributedGraph& graph, const ErgmSpec& spec);

/// f(G + ij) - f(G - ij), computed from the neighborhoods of i and j.
/// IndexError for an out-of-range node, SelfLoop for i == j.
std::vector<double> change_statistic(const AttributedGraph& graph, NodeId i, NodeId j, const ErgmSpec& spec);

/// Which dyads enter the pseudo-likelihood. Nodes with wave -1 are excluded.
/// Every dyad touching `fixed_wave` or joining waves more than one apart is
/// held fixed, as are the pairs listed in `fixed`.
struct DyadMask {
  std::vector<std::int32_t> wave;
  std::int32_t fixed_wave = -1;
  std::unordered_set<std::uint64_t> fixed;  // pair_key

  bool free(NodeId i, NodeId j) const;
};

/// Mask for a snowball sample, in the local ids of materialize(graph, sample):
/// the outermost wave is fixed; each node beyond the seeds keeps one edge to
/// the previous wave fixed (the one to its lowest-id neighbor there); ties
/// between non-adjacent waves are fixed. What remains are the within-wave and
/// adjacent-wave dyads of the inner waves.
DyadMask snowball_mask(const SubgraphSample& sample);

struct MpleConfig {
  std::size_t max_iterations = 100;
  double tolerance = 1e-10;  // on the largest Newton step component
  /// Above this many nodes the regression runs on sampled dyads.
  std::size_t max_nodes = 1500;
  std::size_t sample_dyads = 1000000;
  /// With sampling: all edges plus an equal number of non-edges, the latter
  /// weighted up so the pseudo-likelihood stays unbiased.
  bool edge_balanced = false;
  /// |theta| beyond this marks the fit degenerate (separation).
  double theta_limit = 20.0;
  std::uint64_t seed = 0;
};

struct ErgmFit {
  ErgmSpec spec;
  std::vector<double> theta;
  std::vector<double> std_errors;  // empty for degenerate fits
  bool converged = false;
  bool degenerate = false;
  std::size_t iterations = 0;
  std::size_t dyads = 0;
  double log_pseudo_likelihood = 0.0;
};

/// Logistic regression of the dyad indicators on their change statistics by
/// Newton-Raphson with step halving. Non-convergence, a singular information
/// matrix or a runaway coefficient is reported through `degenerate`.
/// EmptyGraph for a graph with fewer than two nodes; ValueError when the mask
/// leaves no dyads.
ErgmFit mple_fit(const AttributedGraph& graph, const ErgmSpec& spec, const MpleConfig& config = {},
                 const DyadMask* mask = nullptr);

enum class Proposal { kToggle, kFixedDensity };
std::string proposal_name(Proposal p);
Proposal parse_proposal(const std::string& name);

struct McmcConfig {
  Proposal proposal = Proposal::kToggle;
  std::size_t steps = 10000;
  std::size_t burn_in = 1000;
  std::size_t thinning = 100;
  /// Long chains can skip the per-step trace; samples are kept either way.
  bool keep_trace = true;
  std::uint64_t seed = 0;
};

struct McmcResult {
  /// Edge lists (sorted) after steps burn_in + thinning, burn_in + 2 thinning,
  /// ...; the initial graph alone when steps == 0.
  std::vector<std::vector<Edge>> samples;
  std::vector<std::vector<double>> sample_stats;
  /// f after each step; trace[0] is the initial graph. Empty without keep_trace.
  std::vector<std::vector<double>> trace;
  std::size_t proposals = 0;
  std::size_t accepts = 0;
};

/// Metropolis chain on P(G) ~ exp(theta . f(G)). Toggle flips a uniform dyad;
/// fixed density deletes a uniform edge and adds a uniform non-edge in one
/// move, so M never changes. ValueError when burn_in >= steps (unless both
/// are zero), thinning is 0 or theta has the wrong length.
McmcResult mcmc_sample(const ErgmSpec& spec, std::span<const double> theta, const AttributedGraph& init,
                       const McmcConfig& config);

struct GofReport {
  std::size_t samples = 0;
  double reference_density = 0.0;
  double mean_density = 0.0;                  // over simulated graphs
  std::vector<std::size_t> reference;         // nodes of degree d
  std::vector<double> mean, p05, median, p95;  // simulated counts per degree
};

/// Simulates from init = reference and compares degree distributions.
/// Percentiles interpolate linearly between order statistics.
GofReport gof_degree(const ErgmSpec& spec, std::span<const double> theta, const AttributedGraph& reference,
                     const McmcConfig& config);

/// degree,reference,sim_mean,sim_p05,sim_median,sim_p95
void write_gof_csv(std::ostream& out, const GofReport& report);
/// step,<term names>
void write_trace_csv(std::ostream& out, const ErgmSpec& spec, const McmcResult& result);

nlohmann::json ergm_fit_to_json(const ErgmFit& fit);
ErgmFit ergm_fit_from_json(const nlohmann::json& j);

}  // namespace socgen

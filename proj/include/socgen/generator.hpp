#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "socgen/graph.hpp"
#include "socgen/tasks.hpp"

namespace socgen {

/// round(n_gen * m_ref / n_ref). ValueError when n_ref == 0.
std::size_t target_edge_count(std::size_t n_gen, std::size_t n_ref, std::size_t m_ref);

enum class StepKind { kAdd, kDelete };
std::string step_kind_name(StepKind kind);

struct ChainConfig {
  std::size_t iterations = 1000;
  std::size_t batch_size = 1000;  // n: candidate pairs per iteration
  std::size_t target_edges = 0;   // M
  /// Embeddings are recomputed every `refresh_every` iterations (1 = every
  /// iteration). Larger values trade staleness for speed.
  std::size_t refresh_every = 1;
  std::uint64_t seed = 0;
};

struct ChainStep {
  std::size_t iteration = 0;  // 1-based
  StepKind kind = StepKind::kAdd;
  std::size_t proposals = 0;
  std::size_t accepts = 0;
  std::size_t edges = 0;  // after the step
};

struct ChainHistory {
  std::size_t initial_edges = 0;
  std::size_t target_edges = 0;
  std::size_t batch_size = 0;
  std::vector<ChainStep> steps;
};

struct GenerationResult {
  AttributedGraph graph;
  ChainHistory history;
};

/// Called after every iteration with the step and the current edge set (in
/// storage order, not sorted).
using ChainObserver = std::function<void(const ChainStep&, std::span<const Edge>)>;

/// Starts from erdos_renyi_gnm(nodes, M, mix_seed(seed, 1)). Each iteration
/// either proposes n uniform non-edges and adds each with probability p_ij
/// (edge count below M), or proposes n distinct current edges and deletes each
/// with probability 1 - p_ij, where p_ij = sigma(alpha <z_i, z_j> + beta)
/// under the GAE. With alpha == 0 the decoder is constant and the encoder is
/// never run.
GenerationResult generate_graph(const NodeTable& nodes, const GaeModel& gae, const ChainConfig& config,
                                const ChainObserver& observer = {});

struct ChainDiagnostics {
  std::size_t burn_in_steps = 0;
  double mean_edges = 0.0;  // after burn-in
  std::size_t add_steps = 0;
  std::size_t delete_steps = 0;
  std::size_t add_proposals = 0;
  std::size_t add_accepts = 0;
  std::size_t delete_proposals = 0;
  std::size_t delete_accepts = 0;
  double add_accept_ratio = NAN;
  double delete_accept_ratio = NAN;
  double max_deviation = 0.0;  // max |edges - M| after burn-in
  bool drifted = false;        // max_deviation > 2n
};

/// Aggregates over the whole history; edge-count statistics skip the first
/// `burn_in` fraction of steps. EmptyData for an empty history.
ChainDiagnostics chain_diagnostics(const ChainHistory& history, double burn_in = 0.2);

/// CSV: iter,kind,proposals,accepts,edges.
void write_history_csv(std::ostream& out, const ChainHistory& history);

}  // namespace socgen

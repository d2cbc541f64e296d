#include "socgen/generator.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "socgen/error.hpp"
#include "socgen/sampling.hpp"

namespace socgen {

std::size_t target_edge_count(std::size_t n_gen, std::size_t n_ref, std::size_t m_ref) {
  if (n_ref == 0) fail(Errc::kValueError, "reference graph has no nodes");
  return static_cast<std::size_t>(
      std::llround(static_cast<double>(n_gen) * static_cast<double>(m_ref) / static_cast<double>(n_ref)));
}

std::string step_kind_name(StepKind kind) { return kind == StepKind::kAdd ? "add" : "delete"; }

namespace {

/// Edge set with O(1) membership, insertion and removal. Iteration order is
/// the vector order, which only depends on the sequence of operations.
class EdgeSet {
 public:
  explicit EdgeSet(const std::vector<Edge>& edges) {
    for (const auto& e : edges) insert(e);
  }
  std::size_t size() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  bool contains(NodeId a, NodeId b) const { return index_.count(pair_key(a, b)) != 0; }
  void insert(const Edge& e) {
    index_.emplace(pair_key(e.src, e.dst), edges_.size());
    edges_.push_back(e);
  }
  void erase(const Edge& e) {
    const auto it = index_.find(pair_key(e.src, e.dst));
    const std::size_t pos = it->second;
    index_.erase(it);
    if (pos + 1 != edges_.size()) {
      edges_[pos] = edges_.back();
      index_[pair_key(edges_[pos].src, edges_[pos].dst)] = pos;
    }
    edges_.pop_back();
  }

 private:
  std::vector<Edge> edges_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

}  // namespace

GenerationResult generate_graph(const NodeTable& nodes, const GaeModel& gae, const ChainConfig& config,
                                const ChainObserver& observer) {
  if (config.batch_size == 0) fail(Errc::kValueError, "batch size must be >= 1");
  if (config.refresh_every == 0) fail(Errc::kValueError, "refresh_every must be >= 1");
  const std::size_t n = nodes.rows();
  const std::size_t target = config.target_edges;
  const AttributedGraph init = erdos_renyi_gnm(nodes, target, mix_seed(config.seed, 1));
  Rng rng(mix_seed(config.seed, 2));

  const bool constant = gae.alpha == 0.0;
  Tensor features;
  if (!constant) features = gae.features.encode(nodes);
  const double p_const = sigmoid(gae.beta);

  EdgeSet current(init.edges());
  GenerationResult res;
  res.history.initial_edges = current.size();
  res.history.target_edges = target;
  res.history.batch_size = config.batch_size;

  Tensor z;
  bool stale = true;  // graph changed since z was computed
  for (std::size_t t = 1; t <= config.iterations; ++t) {
    if (!constant && stale && (t - 1) % config.refresh_every == 0) {
      z = forward(gae.encoder, AttributedGraph(nodes, EdgeList(current.edges())), features);
      stale = false;
    }
    auto prob = [&](const Edge& e) {
      return constant ? p_const : decode_edge_prob(z.row(e.src), z.row(e.dst), gae.alpha, gae.beta);
    };

    ChainStep step;
    step.iteration = t;
    std::vector<Edge> accepted;
    if (current.size() < target) {
      step.kind = StepKind::kAdd;
      const std::uint64_t room = pair_capacity(n) - current.size();
      const auto want = static_cast<std::size_t>(std::min<std::uint64_t>(room, config.batch_size));
      const auto candidates = sample_allowed_pairs(
          n, want, rng, [&](NodeId a, NodeId b) { return current.contains(a, b); }, current.size());
      step.proposals = candidates.size();
      for (const auto& e : candidates)
        if (rng.bernoulli(prob(e))) accepted.push_back(e);
      for (const auto& e : accepted) current.insert(e);
    } else {
      step.kind = StepKind::kDelete;
      const auto picks = sample_distinct(current.size(), std::min(config.batch_size, current.size()), rng);
      std::vector<Edge> candidates;
      candidates.reserve(picks.size());
      for (NodeId i : picks) candidates.push_back(current.edges()[i]);
      step.proposals = candidates.size();
      for (const auto& e : candidates)
        if (!rng.bernoulli(prob(e))) accepted.push_back(e);
      for (const auto& e : accepted) current.erase(e);
    }
    step.accepts = accepted.size();
    step.edges = current.size();
    if (!accepted.empty()) stale = true;
    res.history.steps.push_back(step);
    if (observer) observer(step, current.edges());
  }

  std::vector<Edge> final_edges = current.edges();
  std::sort(final_edges.begin(), final_edges.end());
  res.graph = AttributedGraph(nodes, EdgeList(std::move(final_edges)));
  return res;
}

ChainDiagnostics chain_diagnostics(const ChainHistory& history, double burn_in) {
  if (history.steps.empty()) fail(Errc::kEmptyData, "chain history is empty");
  if (!(burn_in >= 0 && burn_in < 1)) fail(Errc::kValueError, "burn-in fraction must be in [0, 1)");
  ChainDiagnostics d;
  d.burn_in_steps = static_cast<std::size_t>(std::floor(burn_in * static_cast<double>(history.steps.size())));
  double sum = 0;
  const double target = static_cast<double>(history.target_edges);
  for (std::size_t i = 0; i < history.steps.size(); ++i) {
    const auto& s = history.steps[i];
    if (s.kind == StepKind::kAdd) {
      ++d.add_steps;
      d.add_proposals += s.proposals;
      d.add_accepts += s.accepts;
    } else {
      ++d.delete_steps;
      d.delete_proposals += s.proposals;
      d.delete_accepts += s.accepts;
    }
    if (i < d.burn_in_steps) continue;
    const double e = static_cast<double>(s.edges);
    sum += e;
    d.max_deviation = std::max(d.max_deviation, std::abs(e - target));
  }
  d.mean_edges = sum / static_cast<double>(history.steps.size() - d.burn_in_steps);
  if (d.add_proposals) d.add_accept_ratio = static_cast<double>(d.add_accepts) / static_cast<double>(d.add_proposals);
  if (d.delete_proposals)
    d.delete_accept_ratio = static_cast<double>(d.delete_accepts) / static_cast<double>(d.delete_proposals);
  d.drifted = d.max_deviation > 2.0 * static_cast<double>(history.batch_size);
  return d;
}

void write_history_csv(std::ostream& out, const ChainHistory& history) {
  out << "iter,kind,proposals,accepts,edges\n";
  for (const auto& s : history.steps)
    out << s.iteration << ',' << step_kind_name(s.kind) << ',' << s.proposals << ',' << s.accepts << ',' << s.edges
        << '\n';
}

}  // namespace socgen

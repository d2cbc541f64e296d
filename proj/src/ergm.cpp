#include "socgen/ergm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <unordered_map>

#include <Eigen/Dense>

#include "socgen/autodiff.hpp"
#include "socgen/error.hpp"
#include "socgen/rng.hpp"

namespace socgen {

namespace {

std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool uses_shared_partners(TermType t) { return t == TermType::kEsp || t == TermType::kGwesp; }

/// Per-term data resolved against a node table.
struct Compiled {
  std::vector<Term> terms;
  std::vector<std::vector<double>> values;  // node values for nodecov / nodematch
  bool shared = false;

  /// Weight of an edge with m shared partners (esp, gwesp).
  double weight(std::size_t t, std::size_t m) const {
    const Term& term = terms[t];
    if (term.type == TermType::kEsp) return m == term.k ? 1.0 : 0.0;
    if (m == 0) return 0.0;
    return std::exp(term.decay) * (1.0 - std::pow(1.0 - std::exp(-term.decay), static_cast<double>(m)));
  }
};

Compiled compile(const ErgmSpec& spec, const NodeTable& nodes) {
  spec.validate(nodes.schema());
  Compiled c;
  c.terms = spec.terms;
  c.values.resize(spec.terms.size());
  for (std::size_t t = 0; t < spec.terms.size(); ++t) {
    const Term& term = spec.terms[t];
    if (term.type != TermType::kNodeCov && term.type != TermType::kNodeMatch) {
      c.shared = c.shared || uses_shared_partners(term.type);
      continue;
    }
    const std::size_t col = nodes.schema().require(term.attribute);
    auto& v = c.values[t];
    v.resize(nodes.rows());
    for (std::size_t r = 0; r < nodes.rows(); ++r) {
      v[r] = nodes.at(r, col);
      if (NodeTable::is_missing(v[r]))
        fail(Errc::kValueError, "attribute '" + term.attribute + "' has missing values");
    }
  }
  return c;
}

template <class G>
std::size_t shared_count(const G& g, NodeId a, NodeId b) {
  const auto na = g.neighbors(a);
  const auto nb = g.neighbors(b);
  std::size_t count = 0;
  auto x = na.begin();
  auto y = nb.begin();
  while (x != na.end() && y != nb.end()) {
    if (*x < *y) {
      ++x;
    } else if (*y < *x) {
      ++y;
    } else {
      ++count;
      ++x;
      ++y;
    }
  }
  return count;
}

template <class G>
void common_neighbors(const G& g, NodeId a, NodeId b, std::vector<NodeId>& out) {
  out.clear();
  const auto na = g.neighbors(a);
  const auto nb = g.neighbors(b);
  std::set_intersection(na.begin(), na.end(), nb.begin(), nb.end(), std::back_inserter(out));
}

template <class G>
void change_into(const G& g, const Compiled& c, NodeId i, NodeId j, std::vector<double>& out) {
  out.assign(c.terms.size(), 0.0);
  std::vector<NodeId> common;
  std::vector<std::size_t> sp_i, sp_j;  // shared partners of (i,h), (j,h) without the ij edge
  if (c.shared) {
    common_neighbors(g, i, j, common);
    const std::size_t present = g.has_edge(i, j) ? 1 : 0;
    for (NodeId h : common) {
      sp_i.push_back(shared_count(g, i, h) - present);
      sp_j.push_back(shared_count(g, j, h) - present);
    }
  }
  for (std::size_t t = 0; t < c.terms.size(); ++t) {
    switch (c.terms[t].type) {
      case TermType::kEdges:
        out[t] = 1.0;
        break;
      case TermType::kNodeCov:
        out[t] = c.values[t][i] + c.values[t][j];
        break;
      case TermType::kNodeMatch:
        out[t] = c.values[t][i] == c.values[t][j] ? 1.0 : 0.0;
        break;
      case TermType::kEsp:
      case TermType::kGwesp: {
        double d = c.weight(t, common.size());
        for (std::size_t h = 0; h < common.size(); ++h) {
          d += c.weight(t, sp_i[h] + 1) - c.weight(t, sp_i[h]);
          d += c.weight(t, sp_j[h] + 1) - c.weight(t, sp_j[h]);
        }
        out[t] = d;
        break;
      }
    }
  }
}

template <class G>
std::vector<double> statistics_of(const G& g, const Compiled& c, std::span<const Edge> edges) {
  std::vector<double> f(c.terms.size(), 0.0);
  for (const auto& e : edges) {
    const std::size_t sp = c.shared ? shared_count(g, e.src, e.dst) : 0;
    for (std::size_t t = 0; t < c.terms.size(); ++t) {
      switch (c.terms[t].type) {
        case TermType::kEdges:
          f[t] += 1.0;
          break;
        case TermType::kNodeCov:
          f[t] += c.values[t][e.src] + c.values[t][e.dst];
          break;
        case TermType::kNodeMatch:
          f[t] += c.values[t][e.src] == c.values[t][e.dst] ? 1.0 : 0.0;
          break;
        case TermType::kEsp:
        case TermType::kGwesp:
          f[t] += c.weight(t, sp);
          break;
      }
    }
  }
  return f;
}

/// Mutable simple graph with sorted adjacency lists for the chains.
class DynGraph {
 public:
  explicit DynGraph(const AttributedGraph& g) : adj_(g.num_nodes()) {
    for (const auto& e : g.edges()) add(e.src, e.dst);
  }
  std::size_t num_nodes() const { return adj_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  std::span<const NodeId> neighbors(NodeId v) const { return adj_[v]; }
  bool has_edge(NodeId a, NodeId b) const { return index_.count(pair_key(a, b)) != 0; }
  const std::vector<Edge>& edges() const { return edges_; }

  void add(NodeId a, NodeId b) {
    const Edge e = canonical(a, b);
    index_.emplace(pair_key(a, b), edges_.size());
    edges_.push_back(e);
    insert_sorted(adj_[a], b);
    insert_sorted(adj_[b], a);
  }
  void remove(NodeId a, NodeId b) {
    const auto it = index_.find(pair_key(a, b));
    const std::size_t pos = it->second;
    index_.erase(it);
    if (pos + 1 != edges_.size()) {
      edges_[pos] = edges_.back();
      index_[pair_key(edges_[pos].src, edges_[pos].dst)] = pos;
    }
    edges_.pop_back();
    erase_sorted(adj_[a], b);
    erase_sorted(adj_[b], a);
  }

 private:
  static void insert_sorted(std::vector<NodeId>& v, NodeId x) { v.insert(std::lower_bound(v.begin(), v.end(), x), x); }
  static void erase_sorted(std::vector<NodeId>& v, NodeId x) { v.erase(std::lower_bound(v.begin(), v.end(), x)); }

  std::vector<std::vector<NodeId>> adj_;
  std::vector<Edge> edges_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

double dot(std::span<const double> a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t k = 0; k < b.size(); ++k) s += a[k] * b[k];
  return s;
}

/// Uniform unordered pair of distinct nodes.
Edge random_dyad(std::size_t n, Rng& rng) {
  const auto i = static_cast<NodeId>(rng.index(n));
  auto j = static_cast<NodeId>(rng.index(n - 1));
  if (j >= i) ++j;
  return canonical(i, j);
}

}  // namespace

std::string term_name(const Term& term) {
  switch (term.type) {
    case TermType::kEdges:
      return "edges";
    case TermType::kNodeCov:
      return "nodecov(" + term.attribute + ")";
    case TermType::kNodeMatch:
      return "nodematch(" + term.attribute + ")";
    case TermType::kEsp:
      return "esp(" + std::to_string(term.k) + ")";
    case TermType::kGwesp:
      return "gwesp(" + format_double(term.decay) + ")";
  }
  return {};
}

Term parse_term(const std::string& text) {
  const std::string s = trim(text);
  if (s == "edges") return Term::edges();
  const auto open = s.find('(');
  if (open == std::string::npos || s.back() != ')') fail(Errc::kParseError, "bad ERGM term '" + s + "'");
  const std::string name = trim(s.substr(0, open));
  const std::string arg = trim(s.substr(open + 1, s.size() - open - 2));
  if (arg.empty()) fail(Errc::kParseError, "ERGM term '" + s + "' needs an argument");
  if (name == "nodecov") return Term::nodecov(arg);
  if (name == "nodematch") return Term::nodematch(arg);
  if (name == "esp" || name == "gwesp") {
    double v = 0;
    const auto r = std::from_chars(arg.data(), arg.data() + arg.size(), v);
    if (r.ec != std::errc() || r.ptr != arg.data() + arg.size())
      fail(Errc::kParseError, "bad number in ERGM term '" + s + "'");
    if (name == "gwesp") return Term::gwesp(v);
    if (v < 0 || v != std::floor(v)) fail(Errc::kParseError, "esp needs a non-negative integer");
    return Term::esp(static_cast<std::size_t>(v));
  }
  fail(Errc::kParseError, "unknown ERGM term '" + name + "'");
}

ErgmSpec parse_ergm_spec(const std::string& text) {
  ErgmSpec spec;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto plus = text.find('+', start);
    const std::string part = text.substr(start, plus == std::string::npos ? std::string::npos : plus - start);
    spec.terms.push_back(parse_term(part));
    if (plus == std::string::npos) break;
    start = plus + 1;
  }
  return spec;
}

void ErgmSpec::validate(const FeatureSchema& schema) const {
  if (terms.empty()) fail(Errc::kValueError, "ERGM spec has no terms");
  std::size_t edges = 0;
  for (const auto& t : terms) {
    switch (t.type) {
      case TermType::kEdges:
        ++edges;
        break;
      case TermType::kNodeCov: {
        const auto& col = schema.column(schema.require(t.attribute));
        if (col.categorical() && col.level_count() != 2)
          fail(Errc::kSchemaError, "nodecov needs a continuous or binary column, got '" + t.attribute + "'");
        break;
      }
      case TermType::kNodeMatch:
        schema.require(t.attribute);
        break;
      case TermType::kEsp:
        break;
      case TermType::kGwesp:
        if (!(t.decay > 0)) fail(Errc::kValueError, "gwesp decay must be positive");
        break;
    }
  }
  if (edges > 1) fail(Errc::kValueError, "edges term given more than once");
}

bool ErgmSpec::dyad_independent() const {
  return std::none_of(terms.begin(), terms.end(), [](const Term& t) { return uses_shared_partners(t.type); });
}

std::vector<double> sufficient_statistics(const AttributedGraph& graph, const ErgmSpec& spec) {
  const Compiled c = compile(spec, graph.nodes());
  return statistics_of(graph, c, graph.edges());
}

std::vector<double> change_statistic(const AttributedGraph& graph, NodeId i, NodeId j, const ErgmSpec& spec) {
  if (i >= graph.num_nodes() || j >= graph.num_nodes()) fail(Errc::kIndexError, "node out of range");
  if (i == j) fail(Errc::kSelfLoop, "change statistic of a self pair");
  const Compiled c = compile(spec, graph.nodes());
  std::vector<double> out;
  change_into(graph, c, i, j, out);
  return out;
}

bool DyadMask::free(NodeId i, NodeId j) const {
  const std::int32_t wi = wave[i];
  const std::int32_t wj = wave[j];
  if (wi < 0 || wj < 0) return false;
  if (wi == fixed_wave || wj == fixed_wave) return false;
  if (std::abs(wi - wj) > 1) return false;
  return fixed.count(pair_key(i, j)) == 0;
}

DyadMask snowball_mask(const SubgraphSample& sample) {
  DyadMask mask;
  mask.wave.assign(sample.nodes.size(), -1);
  std::size_t pos = 0;
  for (std::size_t w = 0; w < sample.wave_sizes.size(); ++w)
    for (std::size_t k = 0; k < sample.wave_sizes[w]; ++k) mask.wave[pos++] = static_cast<std::int32_t>(w);
  if (pos != sample.nodes.size()) fail(Errc::kValueError, "sample wave sizes do not cover its nodes");
  mask.fixed_wave = static_cast<std::int32_t>(sample.wave_sizes.size()) - 1;

  std::unordered_map<NodeId, NodeId> local;
  for (std::size_t k = 0; k < sample.nodes.size(); ++k) local.emplace(sample.nodes[k], static_cast<NodeId>(k));
  // Lowest-id neighbor in the previous wave, per node.
  std::vector<NodeId> anchor(sample.nodes.size(), static_cast<NodeId>(-1));
  for (const auto& e : sample.edges) {
    NodeId a = local.at(e.src);
    NodeId b = local.at(e.dst);
    for (int pass = 0; pass < 2; ++pass, std::swap(a, b)) {
      if (mask.wave[a] >= 1 && mask.wave[b] == mask.wave[a] - 1 && b < anchor[a]) anchor[a] = b;
    }
  }
  for (std::size_t v = 0; v < anchor.size(); ++v)
    if (anchor[v] != static_cast<NodeId>(-1)) mask.fixed.insert(pair_key(static_cast<NodeId>(v), anchor[v]));
  return mask;
}

ErgmFit mple_fit(const AttributedGraph& graph, const ErgmSpec& spec, const MpleConfig& config, const DyadMask* mask) {
  const std::size_t n = graph.num_nodes();
  if (n < 2) fail(Errc::kEmptyGraph, "MPLE needs at least two nodes");
  if (mask && mask->wave.size() != n) fail(Errc::kDimensionError, "dyad mask does not match the graph");
  const Compiled c = compile(spec, graph.nodes());
  const std::size_t p = c.terms.size();
  auto is_free = [&](NodeId i, NodeId j) { return !mask || mask->free(i, j); };

  struct Row {
    std::vector<double> x;
    double w1 = 0, w0 = 0;
  };
  std::vector<Row> rows;
  std::vector<double> delta;
  std::size_t dyads = 0;
  auto push = [&](NodeId i, NodeId j, double weight) {
    change_into(graph, c, i, j, delta);
    Row r{delta, 0, 0};
    (graph.has_edge(i, j) ? r.w1 : r.w0) = weight;
    rows.push_back(std::move(r));
    ++dyads;
  };

  if (n <= config.max_nodes) {
    for (NodeId i = 0; i < n; ++i)
      for (NodeId j = i + 1; j < n; ++j)
        if (is_free(i, j)) push(i, j, 1.0);
  } else {
    Rng rng(config.seed);
    const double capacity = static_cast<double>(pair_capacity(n));
    std::size_t drawn = 0, kept = 0;
    auto draw_free = [&]() {
      for (;;) {
        const Edge e = random_dyad(n, rng);
        ++drawn;
        if (is_free(e.src, e.dst)) {
          ++kept;
          return e;
        }
        if (drawn > 1000 && kept == 0) fail(Errc::kValueError, "dyad mask leaves no dyads");
      }
    };
    if (config.edge_balanced) {
      std::size_t positives = 0;
      for (const auto& e : graph.edges())
        if (is_free(e.src, e.dst)) {
          push(e.src, e.dst, 1.0);
          ++positives;
        }
      std::vector<Edge> negatives;
      while (negatives.size() < std::max<std::size_t>(positives, 1)) {
        const Edge e = draw_free();
        if (!graph.has_edge(e.src, e.dst)) negatives.push_back(e);
      }
      const double free_total = capacity * static_cast<double>(kept) / static_cast<double>(drawn);
      const double free_nonedges = std::max(free_total - static_cast<double>(positives), 1.0);
      const double w = free_nonedges / static_cast<double>(negatives.size());
      for (const auto& e : negatives) push(e.src, e.dst, w);
    } else {
      std::vector<Edge> picks;
      picks.reserve(config.sample_dyads);
      for (std::size_t k = 0; k < config.sample_dyads; ++k) picks.push_back(draw_free());
      const double free_total = capacity * static_cast<double>(kept) / static_cast<double>(drawn);
      const double w = free_total / static_cast<double>(picks.size());
      for (const auto& e : picks) push(e.src, e.dst, w);
    }
  }
  if (rows.empty()) fail(Errc::kValueError, "dyad mask leaves no dyads");

  // Identical change-statistic rows collapse into one weighted row.
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.x < b.x; });
  std::vector<Row> merged;
  for (auto& r : rows) {
    if (!merged.empty() && merged.back().x == r.x) {
      merged.back().w1 += r.w1;
      merged.back().w0 += r.w0;
    } else {
      merged.push_back(std::move(r));
    }
  }
  const auto m = static_cast<Eigen::Index>(merged.size());
  Eigen::MatrixXd X(m, static_cast<Eigen::Index>(p));
  Eigen::VectorXd w1(m), w0(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (std::size_t k = 0; k < p; ++k) X(r, static_cast<Eigen::Index>(k)) = merged[r].x[k];
    w1(r) = merged[r].w1;
    w0(r) = merged[r].w0;
  }

  auto loglik = [&](const Eigen::VectorXd& theta) {
    const Eigen::VectorXd eta = X * theta;
    double l = 0;
    for (Eigen::Index r = 0; r < m; ++r) {
      if (w1(r) != 0) l += w1(r) * log_sigmoid(eta(r));
      if (w0(r) != 0) l += w0(r) * log_sigmoid(-eta(r));
    }
    return l;
  };
  auto information = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad, Eigen::MatrixXd& info) {
    const Eigen::VectorXd eta = X * theta;
    Eigen::VectorXd resid(m), curv(m);
    for (Eigen::Index r = 0; r < m; ++r) {
      const double q = sigmoid(eta(r));
      resid(r) = w1(r) - (w1(r) + w0(r)) * q;
      curv(r) = (w1(r) + w0(r)) * q * (1 - q);
    }
    grad = X.transpose() * resid;
    info = X.transpose() * curv.asDiagonal() * X;
  };
  auto positive_definite = [](const Eigen::LDLT<Eigen::MatrixXd>& ldlt) {
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return false;
    const Eigen::VectorXd d = ldlt.vectorD();
    return d.minCoeff() > 1e-12 * std::max(1.0, d.maxCoeff());
  };

  ErgmFit fit;
  fit.spec = spec;
  fit.dyads = dyads;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  Eigen::VectorXd grad;
  Eigen::MatrixXd info;
  bool singular = false;
  double ll = loglik(theta);
  for (std::size_t it = 1; it <= config.max_iterations; ++it) {
    fit.iterations = it;
    information(theta, grad, info);
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (!positive_definite(ldlt)) {
      singular = true;
      break;
    }
    const Eigen::VectorXd step = ldlt.solve(grad);
    double t = 1.0;
    Eigen::VectorXd next = theta + step;
    double next_ll = loglik(next);
    while (next_ll < ll && t > 1e-10) {
      t *= 0.5;
      next = theta + t * step;
      next_ll = loglik(next);
    }
    theta = next;
    ll = next_ll;
    if ((t * step).cwiseAbs().maxCoeff() < config.tolerance) {
      fit.converged = true;
      break;
    }
  }
  fit.theta.assign(theta.data(), theta.data() + theta.size());
  fit.log_pseudo_likelihood = ll;
  fit.degenerate = singular || !fit.converged || theta.cwiseAbs().maxCoeff() > config.theta_limit;
  if (!fit.degenerate) {
    information(theta, grad, info);
    const Eigen::MatrixXd cov = info.inverse();
    for (std::size_t k = 0; k < p; ++k)
      fit.std_errors.push_back(std::sqrt(cov(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k))));
  }
  return fit;
}

std::string proposal_name(Proposal p) { return p == Proposal::kToggle ? "toggle" : "fixed-density"; }

Proposal parse_proposal(const std::string& name) {
  if (name == "toggle") return Proposal::kToggle;
  if (name == "fixed-density") return Proposal::kFixedDensity;
  fail(Errc::kParseError, "unknown proposal '" + name + "'");
}

McmcResult mcmc_sample(const ErgmSpec& spec, std::span<const double> theta, const AttributedGraph& init,
                       const McmcConfig& config) {
  const Compiled c = compile(spec, init.nodes());
  if (theta.size() != c.terms.size()) fail(Errc::kDimensionError, "theta length does not match the terms");
  if (config.thinning == 0) fail(Errc::kValueError, "thinning must be >= 1");
  if (config.steps != 0 && config.burn_in >= config.steps) fail(Errc::kValueError, "burn-in must be below steps");
  if (config.steps == 0 && config.burn_in != 0) fail(Errc::kValueError, "burn-in must be below steps");

  const std::size_t n = init.num_nodes();
  const std::uint64_t capacity = pair_capacity(n);
  DynGraph g(init);
  Rng rng(config.seed);
  McmcResult res;
  std::vector<double> f = statistics_of(g, c, g.edges());
  if (config.keep_trace) {
    res.trace.reserve(config.steps + 1);
    res.trace.push_back(f);
  }
  auto sorted_edges = [&] {
    std::vector<Edge> es = g.edges();
    std::sort(es.begin(), es.end());
    return es;
  };
  if (config.steps == 0) {
    res.samples.push_back(sorted_edges());
    res.sample_stats.push_back(f);
    return res;
  }

  std::vector<double> d1, d2;
  auto accept = [&](double log_ratio) { return log_ratio >= 0 || rng.uniform() < std::exp(log_ratio); };
  for (std::size_t s = 1; s <= config.steps; ++s) {
    if (config.proposal == Proposal::kToggle) {
      if (n >= 2) {
        ++res.proposals;
        const Edge e = random_dyad(n, rng);
        change_into(g, c, e.src, e.dst, d1);
        const bool present = g.has_edge(e.src, e.dst);
        const double sign = present ? -1.0 : 1.0;
        if (accept(sign * dot(theta, d1))) {
          ++res.accepts;
          if (present)
            g.remove(e.src, e.dst);
          else
            g.add(e.src, e.dst);
          for (std::size_t k = 0; k < f.size(); ++k) f[k] += sign * d1[k];
        }
      }
    } else if (g.num_edges() > 0 && g.num_edges() < capacity) {
      ++res.proposals;
      const Edge out = g.edges()[rng.index(g.num_edges())];
      Edge in;
      do {
        in = random_dyad(n, rng);
      } while (g.has_edge(in.src, in.dst));
      change_into(g, c, out.src, out.dst, d1);
      g.remove(out.src, out.dst);
      change_into(g, c, in.src, in.dst, d2);
      for (std::size_t k = 0; k < d2.size(); ++k) d2[k] -= d1[k];
      if (accept(dot(theta, d2))) {
        ++res.accepts;
        g.add(in.src, in.dst);
        for (std::size_t k = 0; k < f.size(); ++k) f[k] += d2[k];
      } else {
        g.add(out.src, out.dst);
      }
    }
    if (config.keep_trace) res.trace.push_back(f);
    if (s > config.burn_in && (s - config.burn_in) % config.thinning == 0) {
      res.samples.push_back(sorted_edges());
      res.sample_stats.push_back(f);
    }
  }
  return res;
}

namespace {

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

GofReport gof_degree(const ErgmSpec& spec, std::span<const double> theta, const AttributedGraph& reference,
                     const McmcConfig& config) {
  const McmcResult sim = mcmc_sample(spec, theta, reference, config);
  const std::size_t n = reference.num_nodes();
  const double capacity = static_cast<double>(pair_capacity(n));
  GofReport rep;
  rep.samples = sim.samples.size();
  rep.reference_density = capacity > 0 ? static_cast<double>(reference.num_edges()) / capacity : 0.0;

  std::vector<std::vector<double>> counts;  // per sample, per degree
  std::size_t width = 0;
  for (NodeId v = 0; v < n; ++v) width = std::max(width, reference.degree(v) + 1);
  for (const auto& edges : sim.samples) {
    std::vector<std::size_t> deg(n, 0);
    for (const auto& e : edges) {
      ++deg[e.src];
      ++deg[e.dst];
    }
    std::vector<double> hist(n, 0.0);
    for (std::size_t d : deg) {
      hist[d] += 1;
      width = std::max(width, d + 1);
    }
    counts.push_back(std::move(hist));
    rep.mean_density += capacity > 0 ? static_cast<double>(edges.size()) / capacity : 0.0;
  }
  rep.mean_density /= static_cast<double>(rep.samples);

  rep.reference.assign(width, 0);
  for (NodeId v = 0; v < n; ++v) ++rep.reference[reference.degree(v)];
  for (std::size_t d = 0; d < width; ++d) {
    std::vector<double> col;
    for (const auto& h : counts) col.push_back(h[d]);
    double mean = 0;
    for (double x : col) mean += x;
    rep.mean.push_back(mean / static_cast<double>(col.size()));
    rep.p05.push_back(percentile(col, 0.05));
    rep.median.push_back(percentile(col, 0.5));
    rep.p95.push_back(percentile(col, 0.95));
  }
  return rep;
}

void write_gof_csv(std::ostream& out, const GofReport& report) {
  out << "degree,reference,sim_mean,sim_p05,sim_median,sim_p95\n";
  for (std::size_t d = 0; d < report.reference.size(); ++d)
    out << d << ',' << report.reference[d] << ',' << format_double(report.mean[d]) << ','
        << format_double(report.p05[d]) << ',' << format_double(report.median[d]) << ','
        << format_double(report.p95[d]) << '\n';
}

void write_trace_csv(std::ostream& out, const ErgmSpec& spec, const McmcResult& result) {
  out << "step";
  for (const auto& t : spec.terms) out << ",\"" << term_name(t) << '"';
  out << '\n';
  for (std::size_t s = 0; s < result.trace.size(); ++s) {
    out << s;
    for (double v : result.trace[s]) out << ',' << format_double(v);
    out << '\n';
  }
}

nlohmann::json ergm_fit_to_json(const ErgmFit& fit) {
  nlohmann::json j;
  j["terms"] = nlohmann::json::array();
  for (const auto& t : fit.spec.terms) j["terms"].push_back(term_name(t));
  j["theta"] = fit.theta;
  j["std_errors"] = fit.degenerate ? nlohmann::json(nullptr) : nlohmann::json(fit.std_errors);
  j["converged"] = fit.converged;
  j["degenerate"] = fit.degenerate;
  j["iterations"] = fit.iterations;
  j["dyads"] = fit.dyads;
  j["log_pseudo_likelihood"] = fit.log_pseudo_likelihood;
  return j;
}

ErgmFit ergm_fit_from_json(const nlohmann::json& j) {
  try {
    ErgmFit fit;
    for (const auto& t : j.at("terms")) fit.spec.terms.push_back(parse_term(t.get<std::string>()));
    fit.theta = j.at("theta").get<std::vector<double>>();
    if (fit.theta.size() != fit.spec.terms.size()) fail(Errc::kParseError, "theta length does not match the terms");
    if (!j.at("std_errors").is_null()) fit.std_errors = j.at("std_errors").get<std::vector<double>>();
    fit.converged = j.at("converged").get<bool>();
    fit.degenerate = j.at("degenerate").get<bool>();
    fit.iterations = j.at("iterations").get<std::size_t>();
    fit.dyads = j.at("dyads").get<std::size_t>();
    fit.log_pseudo_likelihood = j.at("log_pseudo_likelihood").get<double>();
    return fit;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::kParseError, std::string("bad ERGM fit JSON: ") + e.what());
  }
}

}  // namespace socgen

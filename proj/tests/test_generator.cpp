#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <array>
#include <cmath>
#include <map>
#include <sstream>

#include "planted.hpp"
#include "socgen/error.hpp"
#include "socgen/generator.hpp"

using namespace socgen;

namespace {

GaeModel constant_decoder(double p) {
  GaeModel m;
  m.alpha = 0.0;
  m.beta = std::log(p / (1 - p));
  return m;
}

double within_fraction(const AttributedGraph& g, std::size_t col) {
  double same = 0;
  for (const auto& e : g.edges()) same += g.nodes().at(e.src, col) == g.nodes().at(e.dst, col);
  return same / static_cast<double>(g.num_edges());
}

}  // namespace

TEST_CASE("target edge count") {
  CHECK(target_edge_count(500, 500, 1234) == 1234);
  CHECK(target_edge_count(10, 1000, 12300) == 123);
  const auto m = target_edge_count(100000, 1575861, 19481626);
  CHECK(m >= 1236242 - 20);
  CHECK(m <= 1236242 + 20);
  CHECK_THROWS_AS(target_edge_count(10, 0, 5), Error);
}

TEST_CASE("zero iterations return the initialization") {
  NodeTable nodes(FeatureSchema{}, 30);
  ChainConfig cfg;
  cfg.iterations = 0;
  cfg.target_edges = 40;
  cfg.seed = 3;
  const auto res = generate_graph(nodes, constant_decoder(0.5), cfg);
  CHECK(res.graph == erdos_renyi_gnm(nodes, 40, mix_seed(3, 1)));
  CHECK(res.history.steps.empty());
  CHECK_THROWS_AS(chain_diagnostics(res.history), Error);
  cfg.target_edges = 30 * 29 / 2 + 1;
  CHECK_THROWS_AS(generate_graph(nodes, constant_decoder(0.5), cfg), Error);
}

TEST_CASE("constant decoder on three nodes") {
  const double p = 0.5;
  NodeTable nodes(FeatureSchema{}, 3);
  ChainConfig cfg;
  cfg.iterations = 100000;
  cfg.batch_size = 1;
  cfg.target_edges = 1;
  cfg.seed = 11;

  // Entries into a single-edge state are independent uniform picks among the
  // three pairs, so their counts are multinomial; occupancy is checked with
  // batch means because consecutive iterations are correlated.
  std::array<double, 3> entries{};
  constexpr std::size_t kBatches = 100;
  std::vector<std::array<double, 3>> occupancy(kBatches, std::array<double, 3>{});
  std::size_t prev_edges = 1;
  const auto res = generate_graph(nodes, constant_decoder(p), cfg, [&](const ChainStep& s, std::span<const Edge> es) {
    CHECK(es.size() <= 2);
    if (es.size() != 1) {
      prev_edges = es.size();
      return;
    }
    const std::size_t state = es[0].src + es[0].dst - 1;  // (0,1) -> 0, (0,2) -> 1, (1,2) -> 2
    occupancy[(s.iteration - 1) * kBatches / cfg.iterations][state] += 1;
    if (prev_edges == 0) entries[state] += 1;
    prev_edges = 1;
  });

  const double total = entries[0] + entries[1] + entries[2];
  double chi2 = 0;
  for (double c : entries) chi2 += (c - total / 3) * (c - total / 3) / (total / 3);
  const boost::math::chi_squared dist(2);
  MESSAGE("entries " << entries[0] << " " << entries[1] << " " << entries[2] << " chi2 " << chi2);
  CHECK(chi2 < boost::math::quantile(dist, 0.99));

  for (std::size_t k = 0; k < 3; ++k) {
    std::vector<double> share;
    for (const auto& b : occupancy) share.push_back(b[k] / (b[0] + b[1] + b[2]));
    double mean = 0, var = 0;
    for (double x : share) mean += x / kBatches;
    for (double x : share) var += (x - mean) * (x - mean) / (kBatches - 1);
    CHECK(std::abs(mean - 1.0 / 3) <= 3 * std::sqrt(var / kBatches));
  }

  for (const auto& s : res.history.steps) {
    CHECK(s.edges <= 2);
    CHECK(s.proposals == 1);
  }
  const auto d = chain_diagnostics(res.history);
  CHECK_FALSE(d.drifted);
  const double add_sd = std::sqrt(p * (1 - p) / static_cast<double>(d.add_proposals));
  const double del_sd = std::sqrt(p * (1 - p) / static_cast<double>(d.delete_proposals));
  CHECK(std::abs(d.add_accept_ratio - p) <= 3 * add_sd);
  CHECK(std::abs(d.delete_accept_ratio - (1 - p)) <= 3 * del_sd);
}

TEST_CASE("chain invariants") {
  Rng rng(5);
  const auto pop = planted::two_blocks(40, 0.3, 0.05, 9);
  GaeModel gae;
  gae.features = FeatureEncoder::fit(pop.nodes());
  gae.encoder = init_model(Arch::kSage, {gae.features.width(), 8, 4}, {Activation::kTanh, Activation::kIdentity}, 3);
  gae.alpha = 1.5;
  gae.beta = -0.5;
  ChainConfig cfg;
  cfg.iterations = 200;
  cfg.batch_size = 6;
  cfg.target_edges = 60;
  cfg.seed = 21;
  std::size_t checked = 0;
  const auto res = generate_graph(pop.nodes(), gae, cfg, [&](const ChainStep& s, std::span<const Edge> es) {
    CHECK(es.size() == s.edges);
    CHECK(AttributedGraph(pop.nodes(), EdgeList(std::vector<Edge>(es.begin(), es.end()))).num_edges() == s.edges);
    ++checked;
  });
  CHECK(checked == 200);
  CHECK(res.graph.nodes() == pop.nodes());
  std::size_t prev = res.history.initial_edges;
  CHECK(prev == 60);
  for (const auto& s : res.history.steps) {
    CHECK(s.edges + 6 >= 60);
    CHECK(s.edges <= 60 + 6);
    CHECK(s.accepts <= s.proposals);
    const long delta = static_cast<long>(s.edges) - static_cast<long>(prev);
    CHECK(delta == (s.kind == StepKind::kAdd ? 1 : -1) * static_cast<long>(s.accepts));
    CHECK((s.kind == StepKind::kAdd) == (prev < 60));
    prev = s.edges;
  }
  CHECK(res.graph.num_edges() == prev);

  const auto again = generate_graph(pop.nodes(), gae, cfg);
  CHECK(again.graph == res.graph);
  cfg.refresh_every = 10;
  CHECK_NOTHROW(generate_graph(pop.nodes(), gae, cfg));

  FeatureSchema other({continuous_column("z", 0, 1)});
  CHECK_THROWS_AS(generate_graph(NodeTable(other, 40), gae, cfg), Error);
}

TEST_CASE("chain diagnostics") {
  ChainHistory h;
  h.target_edges = 10;
  h.batch_size = 2;
  h.initial_edges = 10;
  for (std::size_t i = 1; i <= 10; ++i) h.steps.push_back({i, StepKind::kDelete, 2, 0, 10});
  auto d = chain_diagnostics(h);
  CHECK(d.mean_edges == 10.0);
  CHECK(d.delete_accept_ratio == 0.0);
  CHECK(std::isnan(d.add_accept_ratio));

  h.steps = {{1, StepKind::kDelete, 2, 1, 9}, {2, StepKind::kAdd, 2, 2, 11}, {3, StepKind::kDelete, 2, 2, 9},
             {4, StepKind::kAdd, 2, 0, 9},    {5, StepKind::kAdd, 2, 1, 10}};
  d = chain_diagnostics(h, 0.2);
  CHECK(d.burn_in_steps == 1);
  CHECK(d.add_steps == 3);
  CHECK(d.delete_steps == 2);
  CHECK(d.add_accept_ratio == 3.0 / 6);
  CHECK(d.delete_accept_ratio == 3.0 / 4);
  CHECK(d.mean_edges == doctest::Approx((11 + 9 + 9 + 10) / 4.0));
  CHECK(d.max_deviation == 1.0);
  CHECK_FALSE(d.drifted);
  h.steps.push_back({6, StepKind::kAdd, 2, 0, 15});
  CHECK(chain_diagnostics(h).drifted);

  std::ostringstream csv;
  write_history_csv(csv, h);
  CHECK(csv.str().rfind("iter,kind,proposals,accepts,edges\n1,delete,2,1,9\n", 0) == 0);
}

TEST_CASE("homophilous decoder raises within-block share") {
  const auto pop = planted::two_blocks(200, 0.12, 0.01, 4);
  GaeConfig gc;
  gc.hidden = {16};
  gc.embedding_dim = 8;
  gc.epochs = 80;
  gc.learning_rate = 1e-2;
  gc.num_roots = 200;
  gc.eval_every = 0;
  gc.seed = 2;
  // Message passing over the ER starting graph mixes the blocks, so the block
  // signal has to come from the node's own features.
  const auto trained = train_gae(pop, Arch::kMlp, gc);

  ChainConfig cfg;
  cfg.iterations = 400;
  cfg.batch_size = 50;
  cfg.target_edges = pop.num_edges();
  cfg.seed = 8;
  const auto res = generate_graph(pop.nodes(), trained.model, cfg);
  const double er = within_fraction(erdos_renyi_gnm(pop.nodes(), pop.num_edges(), mix_seed(8, 1)), 0);
  const double gen = within_fraction(res.graph, 0);
  MESSAGE("within-block share: ER " << er << " generated " << gen << " observed " << within_fraction(pop, 0));
  CHECK(gen - er >= 0.2);
}

#include <doctest.h>

#include <cmath>
#include <map>

#include "oracles.hpp"
#include "planted.hpp"
#include "socgen/error.hpp"
#include "socgen/tasks.hpp"

using namespace socgen;

namespace {

AttributedGraph random_attributed(std::size_t n, double p, Rng& rng) {
  FeatureSchema schema({categorical_column("c", {"u", "v", "w"}), continuous_column("x", -1, 1),
                        categorical_column("label", {"no", "yes"})});
  std::vector<double> values;
  for (std::size_t i = 0; i < n; ++i)
    values.insert(values.end(), {static_cast<double>(rng.index(3)), rng.uniform(-1, 1),
                                 static_cast<double>(rng.index(2))});
  const auto g = oracle::random_graph(n, p, rng);
  return AttributedGraph(NodeTable(schema, n, values), EdgeList(g.edges()));
}

GnnModel random_model(Arch arch, std::vector<std::size_t> dims, Rng& rng, double scale = 1.0) {
  std::vector<Activation> acts(dims.size() - 1, Activation::kTanh);
  acts.back() = Activation::kIdentity;
  auto m = init_model(arch, dims, acts, rng.next());
  for (auto& p : m.params)
    for (auto& v : p.data()) v = rng.uniform(-scale, scale);
  return m;
}

ClassifierModel random_classifier(Arch arch, const AttributedGraph& g, Rng& rng) {
  ClassifierModel m;
  m.target = "label";
  m.classes = {"no", "yes"};
  m.features = FeatureEncoder::fit(g.nodes(), {}, std::string("label"));
  m.encoder = random_model(arch, {m.features.width(), 5, 2}, rng);
  return m;
}

GaeModel random_gae(Arch arch, const AttributedGraph& g, Rng& rng) {
  GaeModel m;
  m.features = FeatureEncoder::fit(g.nodes());
  m.encoder = random_model(arch, {m.features.width(), 6, 3}, rng);
  m.alpha = rng.uniform(0.5, 2.0);
  m.beta = rng.uniform(-1, 1);
  return m;
}

std::vector<Edge> random_pairs(std::size_t n, std::size_t count, Rng& rng) {
  std::vector<Edge> out;
  while (out.size() < count) {
    const auto i = static_cast<NodeId>(rng.index(n)), j = static_cast<NodeId>(rng.index(n));
    if (i != j) out.push_back(canonical(i, j));
  }
  return out;
}

/// Folded mixing matrix by explicit loops over ordered pairs.
Tensor brute_mixing(const Tensor& z, double alpha, double beta, const std::vector<std::uint32_t>& labels,
                    std::size_t k) {
  std::vector<std::vector<double>> s(k, std::vector<double>(k, 0.0));
  double total = 0.0;
  for (std::size_t i = 0; i < z.rows(); ++i)
    for (std::size_t j = 0; j < z.rows(); ++j) {
      if (i == j) continue;
      double dot = 0.0;
      for (std::size_t c = 0; c < z.cols(); ++c) dot += z(i, c) * z(j, c);
      const double p = oracle::sigmoid(alpha * dot + beta);
      s[labels[i]][labels[j]] += p;
      total += p;
    }
  Tensor m(k, k);
  for (std::size_t a = 0; a < k; ++a) {
    m(a, a) = s[a][a] / total;
    for (std::size_t b = a + 1; b < k; ++b) m(a, b) = (s[a][b] + s[b][a]) / total;
  }
  return m;
}

/// AUC as the fraction of (positive, negative) pairs ordered correctly, ties
/// counting one half.
double pairwise_auc(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
  double wins = 0, pos = 0, neg = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i]) pos += 1;
    else neg += 1;
    if (!y[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j]) continue;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / (pos * neg);
}

double brute_ap(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
  std::vector<double> thresholds(s);
  std::sort(thresholds.rbegin(), thresholds.rend());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  double total_pos = 0;
  for (auto v : y) total_pos += v;
  double ap = 0, prev = 0;
  for (double t : thresholds) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s[i] >= t) (y[i] ? tp : fp) += 1;
    ap += (tp / total_pos - prev) * tp / (tp + fp);
    prev = tp / total_pos;
  }
  return ap;
}

Tensor random_joint(std::size_t k, Rng& rng) {
  Tensor t(k, k);
  double s = 0;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a; b < k; ++b) s += t(a, b) = rng.uniform(0.05, 1.0);
  for (auto& v : t.data()) v /= s;
  return t;
}

}  // namespace

// ---------------------------------------------------------------------------

TEST_CASE("roc auc against the pairwise oracle") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.index(60);
    std::vector<double> s(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.index(8)) / 8.0;  // plenty of ties
      y[i] = static_cast<std::uint8_t>(rng.index(2));
    }
    y[0] = 1;
    y[1] = 0;
    CHECK(roc_auc(s, y) == pairwise_auc(s, y));
    CHECK(average_precision(s, y) == doctest::Approx(brute_ap(s, y)).epsilon(1e-12));
    const auto roc = roc_curve(s, y);
    CHECK(roc.front() == std::pair{0.0, 0.0});
    CHECK(roc.back() == std::pair{1.0, 1.0});
    for (std::size_t i = 1; i < roc.size(); ++i) {
      CHECK(roc[i].first >= roc[i - 1].first);
      CHECK(roc[i].second >= roc[i - 1].second);
    }
  }
}

TEST_CASE("metric edge cases") {
  std::vector<double> s{0.1, 0.9, 0.8, 0.2};
  std::vector<std::uint8_t> y{0, 1, 1, 0};
  CHECK(roc_auc(s, y) == 1.0);
  CHECK(average_precision(s, y) == 1.0);
  CHECK(std::isnan(roc_auc(s, std::vector<std::uint8_t>{1, 1, 1, 1})));
  CHECK_THROWS_AS(roc_auc(s, std::vector<std::uint8_t>{1, 0}), Error);

  Rng rng(11);
  std::vector<double> rs(10000);
  std::vector<std::uint8_t> ry(10000);
  for (std::size_t i = 0; i < rs.size(); ++i) {
    rs[i] = rng.uniform();
    ry[i] = i % 2;
  }
  CHECK(std::abs(roc_auc(rs, ry) - 0.5) <= 0.02);
}

// ---------------------------------------------------------------------------

TEST_CASE("class probabilities") {
  Rng rng(5);
  auto g = random_attributed(6, 0.5, rng);
  ClassifierModel m = random_classifier(Arch::kMlp, g, rng);
  for (auto& p : m.encoder.params) std::fill(p.data().begin(), p.data().end(), 0.0);
  auto p = predict_class_proba(m, g);
  for (double v : p.data()) CHECK(v == 0.5);

  m.encoder.bias(1)(0, 0) = std::log(2.0);
  p = predict_class_proba(m, g, std::vector<NodeId>{3});
  CHECK(p.rows() == 1);
  CHECK(p(0, 0) == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(p(0, 1) == doctest::Approx(1.0 / 3).epsilon(1e-15));

  for (Arch arch : {Arch::kMlp, Arch::kGcn, Arch::kSage}) {
    auto cm = random_classifier(arch, g, rng);
    const auto probs = predict_class_proba(cm, g);
    oracle::Dense logits = oracle::dense_forward(cm.encoder, g, cm.features.encode(g.nodes()));
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      Eigen::RowVectorXd e = logits.row(i).array().exp();
      e /= e.sum();
      CHECK(std::abs(probs(i, 0) + probs(i, 1) - 1.0) <= 1e-12);
      CHECK(std::abs(probs(i, 0) - e(0)) < 1e-12);
      CHECK(std::abs(probs(i, 1) - e(1)) < 1e-12);
    }
  }

  FeatureSchema other({continuous_column("x", -1, 1)});
  AttributedGraph foreign(NodeTable(other, 6), EdgeList{});
  CHECK_THROWS_WITH_AS(predict_class_proba(m, foreign), doctest::Contains("schema"), Error);
}

TEST_CASE("classification loss") {
  Tensor perfect(3, 2, std::vector<double>{1, 0, 0, 1, 1, 0});
  std::vector<std::uint32_t> labels{0, 1, 0};
  std::vector<NodeId> all{0, 1, 2};
  CHECK(classification_loss(perfect, labels, all) == 0.0);
  Tensor uniform(3, 4, 0.25);
  CHECK(classification_loss(uniform, std::vector<std::uint32_t>{2, 3, 0}, all) == doctest::Approx(3 * std::log(4.0)).epsilon(1e-14));
  Tensor bad(1, 2, std::vector<double>{0.5, 0.6});
  CHECK_THROWS_AS(classification_loss(bad, std::vector<std::uint32_t>{0}, std::vector<NodeId>{0}), Error);

  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor p(8, 3);
    std::vector<std::uint32_t> y(8);
    for (std::size_t i = 0; i < 8; ++i) {
      double s = 0;
      for (std::size_t c = 0; c < 3; ++c) s += p(i, c) = rng.uniform(0.01, 1);
      for (std::size_t c = 0; c < 3; ++c) p(i, c) /= s;
      y[i] = static_cast<std::uint32_t>(rng.index(3));
    }
    std::vector<NodeId> subset{1, 4, 6};
    double expect = 0;
    for (NodeId i : subset)
      for (std::size_t c = 0; c < 3; ++c) expect -= (y[i] == c ? 1.0 : 0.0) * std::log(p(i, c));
    CHECK(classification_loss(p, y, subset) == doctest::Approx(expect).epsilon(1e-13));
    CHECK(classification_loss(p, y, subset) >= 0.0);
  }
}

TEST_CASE("classification loss gradients through every encoder") {
  Rng rng(13);
  for (Arch arch : {Arch::kMlp, Arch::kGcn, Arch::kSage}) {
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t n = 4 + rng.index(4);
      auto g = oracle::random_graph(n, 0.4, rng);
      auto model = random_model(arch, {3, 4, 3}, rng);
      const auto prop = propagation_for(model, g);
      Tensor onehot(n, 3);
      for (std::size_t i = 0; i + 1 < n; ++i) onehot(i, rng.index(3)) = 1.0;  // last row unlabelled
      Tape tape;
      auto leaves = parameter_leaves(tape, model);
      const Var x = tape.leaf(oracle::random_tensor(n, 3, rng));
      const Var logits = encode(tape, model, leaves, prop ? &*prop : nullptr, x);
      const Var loss = record_classification_loss(tape, logits, onehot);
      leaves.push_back(x);
      CHECK(oracle::gradient_error(tape, leaves, loss) < 1e-5);
    }
  }
}

TEST_CASE("classifier training") {
  Rng rng(17);
  auto g = random_attributed(60, 0.1, rng);
  ClassifierConfig cfg;
  cfg.hidden = {8};
  cfg.epochs = 3;
  CHECK_THROWS_WITH_AS(train_classifier(g, "x", Arch::kMlp, cfg), doctest::Contains("categorical"), Error);

  // constant label
  NodeTable t = g.nodes();
  for (std::size_t r = 0; r < t.rows(); ++r) t.set(r, 2, 0.0);
  AttributedGraph constant(t, EdgeList(g.edges()));
  cfg.epochs = 20;
  cfg.learning_rate = 1e-2;
  for (Arch arch : {Arch::kMlp, Arch::kSage}) {
    const auto res = train_classifier(constant, "label", arch, cfg);
    CHECK(res.curve.size() == 20);
    CHECK(res.test.accuracy == 1.0);
    CHECK(res.curve.back().loss < res.curve.front().loss);
  }

  // deterministic under a fixed seed
  cfg.epochs = 2;
  const auto a = train_classifier(g, "label", Arch::kGcn, cfg);
  const auto b = train_classifier(g, "label", Arch::kGcn, cfg);
  CHECK(a.model.encoder.params == b.model.encoder.params);
}

TEST_CASE("planted classification, small scale") {
  ClassifierConfig cfg;
  cfg.hidden = {32};
  cfg.epochs = 40;
  cfg.learning_rate = 1e-2;
  cfg.seed = 1;

  const auto own = planted::own_feature_labels(800, 1);
  const double mlp_a = train_classifier(own, "label", Arch::kMlp, cfg).test.accuracy;
  const double sage_a = train_classifier(own, "label", Arch::kSage, cfg).test.accuracy;
  MESSAGE("own-feature labels: mlp " << mlp_a << " sage " << sage_a);
  CHECK(mlp_a >= 0.9);
  CHECK(sage_a >= 0.85);

  const auto nbr = planted::neighbor_majority_labels(800, 1);
  const double mlp_b = train_classifier(nbr, "label", Arch::kMlp, cfg).test.accuracy;
  const double sage_b = train_classifier(nbr, "label", Arch::kSage, cfg).test.accuracy;
  MESSAGE("neighbor labels: mlp " << mlp_b << " sage " << sage_b);
  CHECK(sage_b - mlp_b >= 0.10);
}

TEST_CASE("imputation") {
  Rng rng(19);
  auto g = random_attributed(30, 0.2, rng);
  auto model = random_classifier(Arch::kSage, g, rng);
  CHECK(impute_node_attribute(model, g, {}) == g.nodes());

  // fully confident model
  auto confident = random_classifier(Arch::kMlp, g, rng);
  for (auto& p : confident.encoder.params) std::fill(p.data().begin(), p.data().end(), 0.0);
  confident.encoder.bias(1)(0, 1) = 50.0;
  NodeTable holes = g.nodes();
  holes.set(4, 2, NAN);
  holes.set(0, 2, 0.0);
  AttributedGraph gh(holes, EdgeList(g.edges()));
  const auto filled = impute_node_attribute(confident, gh, std::vector<NodeId>{4});
  CHECK(filled.at(4, 2) == 1.0);
  CHECK(filled.at(0, 2) == 0.0);

  // 20% missing: compare with predict-then-assign
  auto own = planted::own_feature_labels(200, 3);
  NodeTable partial = own.nodes();
  std::vector<NodeId> missing;
  for (NodeId i = 0; i < partial.rows(); i += 5) {
    partial.set(i, 3, NAN);
    missing.push_back(i);
  }
  AttributedGraph gp(partial, EdgeList(own.edges()));
  ClassifierConfig cfg;
  cfg.hidden = {8};
  cfg.epochs = 5;
  const auto trained = train_classifier(gp, "label", Arch::kGcn, cfg).model;
  const auto out = impute_node_attribute(trained, gp, missing);
  const auto probs = predict_class_proba(trained, gp);
  for (NodeId i = 0; i < partial.rows(); ++i) {
    if (i % 5 == 0) {
      const double expect = probs(i, 1) > probs(i, 0) ? 1.0 : 0.0;
      CHECK(out.at(i, 3) == expect);
    } else {
      CHECK(out.at(i, 3) == partial.at(i, 3));
    }
  }
  CHECK_FALSE(out.has_missing());
}

TEST_CASE("classifier json round trip") {
  Rng rng(23);
  auto g = random_attributed(12, 0.3, rng);
  auto m = random_classifier(Arch::kSage, g, rng);
  const auto back = classifier_from_json(nlohmann::json::parse(classifier_to_json(m).dump()));
  CHECK(back.encoder.params == m.encoder.params);
  CHECK(predict_class_proba(back, g) == predict_class_proba(m, g));
  auto j = classifier_to_json(m);
  j["classes"].push_back("maybe");
  CHECK_THROWS_AS(classifier_from_json(j), Error);
}

// ---------------------------------------------------------------------------

TEST_CASE("edge decoder") {
  std::vector<double> zero{0.0, 0.0}, a{1.0, 2.0};
  CHECK(decode_edge_prob(zero, a, 1.0, 0.0) == 0.5);
  const double r = std::sqrt(std::log(3.0));
  std::vector<double> z{r, 0.0};
  CHECK(decode_edge_prob(z, z, 1.0, 0.0) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK_THROWS_AS(decode_edge_prob(a, std::vector<double>{1.0}, 1, 0), Error);

  Rng rng(29);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> u(4), v(4);
    for (auto& x : u) x = rng.uniform(-1, 1);
    for (auto& x : v) x = rng.uniform(-1, 1);
    const double al = rng.uniform(-2, 2), be = rng.uniform(-1, 1);
    double dot = 0;
    for (int c = 0; c < 4; ++c) dot += u[c] * v[c];
    CHECK(decode_edge_prob(u, v, al, be) == doctest::Approx(oracle::sigmoid(al * dot + be)).epsilon(1e-14));
    CHECK(decode_edge_prob(u, v, al, be) == decode_edge_prob(v, u, al, be));
  }
}

TEST_CASE("gae loss") {
  Tensor zero(4, 3);
  std::vector<Edge> pos{{0, 1}, {2, 3}}, neg{{0, 2}};
  CHECK(gae_loss(zero, pos, neg, 1.0, 0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK_THROWS_AS(gae_loss(zero, {}, neg, 1, 0), Error);
  CHECK_THROWS_AS(gae_loss(zero, pos, {}, 1, 0), Error);

  // separated embeddings: loss shrinks as the scale grows
  double prev = INFINITY;
  for (double scale : {1.0, 2.0, 4.0, 8.0}) {
    Tensor z(4, 2);
    z(0, 0) = z(1, 0) = scale;
    z(2, 1) = z(3, 1) = scale;
    const double l = gae_loss(z, pos, std::vector<Edge>{{0, 2}, {1, 3}}, 1.0, -scale * scale / 2);
    CHECK(l < prev);
    prev = l;
  }
  CHECK(prev < 1e-6);

  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const auto z = oracle::random_tensor(9, 3, rng);
    const auto p = random_pairs(9, 5, rng), n = random_pairs(9, 6, rng);
    const double al = rng.uniform(0.2, 2), be = rng.uniform(-1, 1);
    double expect = 0;
    for (const auto& e : p)
      expect -= std::log(oracle::sigmoid(al * (oracle::to_dense(z).row(e.src).dot(oracle::to_dense(z).row(e.dst))) + be));
    for (const auto& e : n)
      expect -= std::log(1 - oracle::sigmoid(al * (oracle::to_dense(z).row(e.src).dot(oracle::to_dense(z).row(e.dst))) + be));
    expect /= static_cast<double>(p.size() + n.size());
    CHECK(gae_loss(z, p, n, al, be) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("gae loss gradients") {
  Rng rng(37);
  for (int trial = 0; trial < 20; ++trial) {
    Tape tape;
    const Var z = tape.leaf(oracle::random_tensor(8, 3, rng));
    const Var a = tape.leaf(Tensor::scalar(rng.uniform(0.5, 1.5)));
    const Var b = tape.leaf(Tensor::scalar(rng.uniform(-0.5, 0.5)));
    const Var loss = record_gae_loss(tape, z, random_pairs(8, 6, rng), random_pairs(8, 6, rng), a, b);
    CHECK(oracle::gradient_error(tape, {z, a, b}, loss) < 1e-5);
  }
  // through a SAGE encoder
  for (int trial = 0; trial < 20; ++trial) {
    auto g = oracle::random_graph(7, 0.4, rng);
    auto model = random_model(Arch::kSage, {3, 4, 2}, rng);
    const auto prop = propagation_for(model, g);
    Tape tape;
    auto leaves = parameter_leaves(tape, model);
    const Var x = tape.leaf(oracle::random_tensor(7, 3, rng));
    const Var z = encode(tape, model, leaves, &*prop, x);
    const Var a = tape.leaf(Tensor::scalar(1.0));
    const Var b = tape.leaf(Tensor::scalar(0.0));
    const Var loss = record_gae_loss(tape, z, random_pairs(7, 4, rng), random_pairs(7, 4, rng), a, b);
    leaves.insert(leaves.end(), {x, a, b});
    CHECK(oracle::gradient_error(tape, leaves, loss) < 1e-5);
  }
}

// ---------------------------------------------------------------------------

TEST_CASE("model mixing matrix examples") {
  Rng rng(41);
  const auto z = oracle::random_tensor(5, 2, rng);
  auto m = model_mixing_matrix(z, 1, 0, std::vector<std::uint32_t>(5, 1), 3);
  CHECK(m(1, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(m(0, 0) == 0.0);

  m = model_mixing_matrix(oracle::random_tensor(2, 2, rng), 1, 0, std::vector<std::uint32_t>{0, 1}, 2);
  CHECK(m(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(m(0, 0) == 0.0);
  CHECK(m(1, 1) == 0.0);

  // three nodes labelled (a, a, b)
  const auto z3 = oracle::random_tensor(3, 2, rng);
  const auto d = oracle::to_dense(z3);
  const double p01 = oracle::sigmoid(d.row(0).dot(d.row(1)));
  const double p02 = oracle::sigmoid(d.row(0).dot(d.row(2)));
  const double p12 = oracle::sigmoid(d.row(1).dot(d.row(2)));
  m = model_mixing_matrix(z3, 1, 0, std::vector<std::uint32_t>{0, 0, 1}, 2);
  CHECK(m(0, 0) == doctest::Approx(p01 / (p01 + p02 + p12)).epsilon(1e-14));
  CHECK(m(0, 1) == doctest::Approx((p02 + p12) / (p01 + p02 + p12)).epsilon(1e-14));
  CHECK(m(1, 0) == 0.0);

  FeatureSchema schema({continuous_column("x", 0, 1)});
  CHECK_THROWS_AS(model_mixing_matrix(z, 1, 0, NodeTable(schema, 5), "x"), Error);
}

TEST_CASE("model mixing matrix against the brute-force double loop") {
  Rng rng(43);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.index(49);
    const std::size_t k = 2 + rng.index(3);
    const auto z = oracle::random_tensor(n, 3, rng);
    std::vector<std::uint32_t> labels(n);
    for (auto& l : labels) l = static_cast<std::uint32_t>(rng.index(k));
    const double al = rng.uniform(0.2, 2), be = rng.uniform(-2, 1);
    const auto m = model_mixing_matrix(z, al, be, labels, k);
    CHECK(oracle::max_abs_diff(m, brute_mixing(z, al, be, labels, k)) < 1e-10);
    double total = 0;
    for (double v : m.data()) {
      CHECK(v >= 0.0);
      total += v;
    }
    CHECK(std::abs(total - 1.0) < 1e-10);
  }
}

TEST_CASE("sampled mixing estimate") {
  Rng rng(47);
  const auto z = oracle::random_tensor(300, 2, rng, 0.7);
  std::vector<std::uint32_t> labels(300);
  for (auto& l : labels) l = static_cast<std::uint32_t>(rng.index(3));
  const auto exact = model_mixing_matrix(z, 1.5, -0.5, labels, 3);
  const auto approx = model_mixing_matrix(z, 1.5, -0.5, labels, 3, MixingEstimate{100, 1000000, 5});
  CHECK(oracle::max_abs_diff(exact, approx) < 5e-3);
  double total = 0;
  for (double v : approx.data()) total += v;
  CHECK(std::abs(total - 1.0) < 1e-12);
  for (std::size_t a = 1; a < 3; ++a)
    for (std::size_t b = 0; b < a; ++b) CHECK(approx(a, b) == 0.0);
}

TEST_CASE("regularized loss") {
  Rng rng(53);
  for (int trial = 0; trial < 20; ++trial) {
    const auto z = oracle::random_tensor(10, 3, rng);
    const auto p = random_pairs(10, 5, rng), n = random_pairs(10, 5, rng);
    std::vector<std::uint32_t> labels(10);
    for (auto& l : labels) l = static_cast<std::uint32_t>(rng.index(2));
    labels[0] = 0;
    labels[1] = 1;
    const double al = rng.uniform(0.5, 1.5), be = rng.uniform(-1, 1);
    const auto target = random_joint(2, rng);

    // lambda = 0 is the plain loss, bit for bit
    CHECK(regularized_gae_loss(z, p, n, al, be, target, 0.0, labels) == gae_loss(z, p, n, al, be));

    // sum of parts
    const double lam = rng.uniform(0.1, 5);
    const auto model = model_mixing_matrix(z, al, be, labels, 2);
    double h = 0;
    for (std::size_t i = 0; i < 4; ++i) h -= target[i] * std::log(model[i] + 1e-12);
    CHECK(regularized_gae_loss(z, p, n, al, be, target, lam, labels) ==
          doctest::Approx(gae_loss(z, p, n, al, be) + lam * h).epsilon(1e-12));

    // Gibbs: the cross-entropy is smallest when the model matches the target
    const double self = regularized_gae_loss(z, p, n, al, be, model, 1.0, labels) - gae_loss(z, p, n, al, be);
    CHECK(self == doctest::Approx(mixing_cross_entropy(model, model)).epsilon(1e-10));
    CHECK(mixing_cross_entropy(model, model) <= mixing_cross_entropy(model, random_joint(2, rng)));
  }
  const auto z = oracle::random_tensor(4, 2, rng);
  CHECK_THROWS_AS(regularized_gae_loss(z, std::vector<Edge>{{0, 1}}, std::vector<Edge>{{0, 2}}, 1, 0, random_joint(2, rng),
                                       -1.0, std::vector<std::uint32_t>{0, 1, 0, 1}),
                  Error);
}

TEST_CASE("regularized loss gradients") {
  Rng rng(59);
  for (bool sampled : {false, true}) {
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t n = 8;
      std::vector<std::uint32_t> labels(n);
      for (auto& l : labels) l = static_cast<std::uint32_t>(rng.index(3));
      MixingEstimate est;
      if (sampled) est = MixingEstimate{4, 300, rng.next()};
      Tape tape;
      const Var z = tape.leaf(oracle::random_tensor(n, 3, rng));
      const Var a = tape.leaf(Tensor::scalar(rng.uniform(0.5, 1.5)));
      const Var b = tape.leaf(Tensor::scalar(rng.uniform(-0.5, 0.5)));
      const Var loss = record_regularized_gae_loss(tape, z, random_pairs(n, 5, rng), random_pairs(n, 5, rng), a, b,
                                                   random_joint(3, rng), rng.uniform(0.5, 3), labels, est);
      CHECK(oracle::gradient_error(tape, {z, a, b}, loss) < 1e-5);
    }
  }
}

// ---------------------------------------------------------------------------

TEST_CASE("pipelines are equivariant") {
  Rng rng(61);
  for (Arch arch : {Arch::kMlp, Arch::kGcn, Arch::kSage}) {
    for (int trial = 0; trial < 5; ++trial) {
      auto g = random_attributed(15, 0.25, rng);
      const auto perm = Permutation::random(15, rng);
      const auto pg = apply_permutation(g, perm);

      const auto cm = random_classifier(arch, g, rng);
      const auto p = predict_class_proba(cm, g);
      const auto pp = predict_class_proba(cm, pg);
      double worst = 0;
      for (NodeId i = 0; i < 15; ++i)
        for (std::size_t c = 0; c < 2; ++c) worst = std::max(worst, std::abs(p(i, c) - pp(perm(i), c)));
      CHECK(worst < 1e-10);
      const auto r = evaluate_classifier(cm, g), rp = evaluate_classifier(cm, pg);
      CHECK(std::abs(r.loss - rp.loss) < 1e-10);
      CHECK(r.accuracy == rp.accuracy);
      CHECK(std::abs(r.auc - rp.auc) < 1e-10);

      const auto gm = random_gae(arch, g, rng);
      std::vector<Edge> pos(g.edges().begin(), g.edges().begin() + std::min<std::size_t>(5, g.num_edges()));
      const auto neg = sample_negative_edges(g, 5, rng);
      auto map = [&](const std::vector<Edge>& es) {
        std::vector<Edge> out;
        for (const auto& e : es) out.push_back(canonical(perm(e.src), perm(e.dst)));
        return out;
      };
      if (pos.empty()) continue;
      const auto lr = evaluate_link_predictor(gm, g, pos, neg);
      const auto lp = evaluate_link_predictor(gm, pg, map(pos), map(neg));
      CHECK(std::abs(lr.loss - lp.loss) < 1e-10);
      CHECK(std::abs(lr.auc - lp.auc) < 1e-10);
      CHECK(std::abs(lr.average_precision - lp.average_precision) < 1e-10);
    }
  }
}

// ---------------------------------------------------------------------------

TEST_CASE("gae training") {
  GaeConfig cfg;
  cfg.hidden = {32};
  cfg.embedding_dim = 16;
  cfg.epochs = 60;
  cfg.learning_rate = 1e-2;
  cfg.num_roots = 160;
  cfg.eval_every = 0;
  CHECK_THROWS_AS(train_gae(make_graph(5, {}), Arch::kSage, cfg), Error);

  const auto g = planted::homophilous_cliques(20, 8, 5, 2);
  const auto res = train_gae(g, Arch::kSage, cfg);
  MESSAGE("clique AUC " << res.test.auc << " AP " << res.test.average_precision);
  CHECK(res.test.auc >= 0.95);
  CHECK(res.curve.size() == 60);
  CHECK(res.split.train_edges.size() + res.split.test_edges.size() == g.num_edges());
  for (const auto& e : res.test_negatives) CHECK_FALSE(g.has_edge(e.src, e.dst));

  // smoothed loss trend
  std::vector<double> windows;
  for (std::size_t w = 0; w + 10 <= res.curve.size(); w += 10) {
    double s = 0;
    for (std::size_t i = w; i < w + 10; ++i) s += res.curve[i].loss;
    windows.push_back(s / 10);
  }
  for (std::size_t i = 1; i < windows.size(); ++i) CHECK(windows[i] <= windows[i - 1]);

  const auto back = gae_from_json(nlohmann::json::parse(gae_to_json(res.model).dump()));
  CHECK(embed(back, g) == embed(res.model, g));
  CHECK(back.alpha == res.model.alpha);
}

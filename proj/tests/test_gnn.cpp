#include <doctest.h>

#include "oracles.hpp"
#include "socgen/error.hpp"
#include "socgen/gnn.hpp"

using namespace socgen;

namespace {

using oracle::Dense;

GnnModel random_model(Arch arch, std::vector<std::size_t> dims, Rng& rng) {
  std::vector<Activation> acts(dims.size() - 1, Activation::kTanh);
  acts.back() = Activation::kIdentity;
  auto m = init_model(arch, dims, acts, rng.next());
  for (auto& p : m.params)
    for (auto& v : p.data()) v = rng.uniform(-1, 1);
  return m;
}

}  // namespace

TEST_CASE("normalized adjacency") {
  auto iso = normalized_adjacency(make_graph(1, {}));
  CHECK(iso.self_weight[0] == 1.0);
  auto edge = normalized_adjacency(make_graph(2, {{0, 1}}));
  CHECK(edge.coefficient(0, 0) == 0.5);
  CHECK(edge.coefficient(1, 1) == 0.5);
  CHECK(edge.coefficient(0, 1) == doctest::Approx(0.5).epsilon(1e-15));

  Rng rng(1);
  auto g = oracle::random_graph(10, 0.3, rng);
  auto p = normalized_adjacency(g);
  Dense a = oracle::adjacency(g) + Dense::Identity(10, 10);
  Eigen::VectorXd d = a.rowwise().sum().cwiseSqrt().cwiseInverse();
  Dense ref = d.asDiagonal() * a * d.asDiagonal();
  for (NodeId i = 0; i < 10; ++i) {
    CHECK(p.self_weight[i] > 0);
    for (NodeId j = 0; j < 10; ++j) {
      CHECK(p.coefficient(i, j) == doctest::Approx(ref(i, j)).epsilon(1e-14));
      CHECK(p.coefficient(i, j) == p.coefficient(j, i));
    }
  }
}

TEST_CASE("mlp forward") {
  auto m = init_model(Arch::kMlp, {3, 4, 2}, {Activation::kRelu, Activation::kSigmoid}, 1);
  for (auto& p : m.params) p = Tensor(p.rows(), p.cols());
  Rng rng(2);
  auto out = mlp_forward(m, oracle::random_tensor(5, 3, rng));
  for (double v : out.data()) CHECK(v == 0.5);

  // one layer with a single sigmoid output is logistic regression
  auto lr = init_model(Arch::kMlp, {5, 1}, {Activation::kSigmoid}, 3);
  CHECK(lr.parameter_count() == 6);
  Tensor x = oracle::random_tensor(4, 5, rng);
  auto y = mlp_forward(lr, x);
  for (std::size_t r = 0; r < 4; ++r) {
    double s = lr.bias(0)[0];
    for (std::size_t c = 0; c < 5; ++c) s += x(r, c) * lr.weight(0)(c, 0);
    CHECK(y(r, 0) == doctest::Approx(oracle::sigmoid(s)).epsilon(1e-15));
  }
  CHECK_THROWS_AS(mlp_forward(lr, oracle::random_tensor(4, 6, rng)), Error);
}

TEST_CASE("gcn forward") {
  auto m = init_model(Arch::kGcn, {1, 1}, {Activation::kIdentity}, 1);
  m.weight(0)(0, 0) = 1.0;
  auto out = gcn_forward(m, make_graph(2, {{0, 1}}), Tensor(2, 1, std::vector<double>{3.0, 5.0}));
  CHECK(out(0, 0) == doctest::Approx(4.0));
  CHECK(out(1, 0) == doctest::Approx(4.0));

  Rng rng(4);
  for (int rep = 0; rep < 10; ++rep) {
    auto g = oracle::random_graph(8, 0.35, rng);
    auto gm = random_model(Arch::kGcn, {3, 5, 2}, rng);
    Tensor v = oracle::random_tensor(8, 3, rng);
    CHECK(oracle::max_abs_diff(gcn_forward(gm, g, v), oracle::from_dense(oracle::dense_forward(gm, g, v))) < 1e-12);
    // no edges: identical to the MLP with the same parameters
    GnnModel as_mlp = gm;
    as_mlp.arch = Arch::kMlp;
    CHECK(gcn_forward(gm, make_graph(8, {}), v) == mlp_forward(as_mlp, v));
  }
}

TEST_CASE("sage forward") {
  auto m = init_model(Arch::kSage, {2, 2}, {Activation::kIdentity}, 1, Aggregation::kSum);
  m.weight(0) = Tensor(2, 2);
  m.neighbor_weight(0) = Tensor(2, 2, std::vector<double>{1, 0, 0, 1});
  Tensor v(2, 2, std::vector<double>{1, 2, 3, 4});
  auto out = sage_forward(m, make_graph(2, {{0, 1}}), v);
  CHECK(out(0, 0) == 3.0);
  CHECK(out(0, 1) == 4.0);

  Rng rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    auto g = oracle::random_graph(8, 0.3, rng);
    auto sm = random_model(Arch::kSage, {3, 6, 2}, rng);
    Tensor x = oracle::random_tensor(8, 3, rng);
    CHECK(oracle::max_abs_diff(sage_forward(sm, g, x), oracle::from_dense(oracle::dense_forward(sm, g, x))) < 1e-12);
    // zero neighbor weights reduce the layer to the MLP with (W1, b)
    GnnModel mlp = init_model(Arch::kMlp, sm.dims, sm.activations, 0);
    for (std::size_t l = 0; l < sm.num_layers(); ++l) {
      sm.neighbor_weight(l) = Tensor(sm.dims[l], sm.dims[l + 1]);
      mlp.weight(l) = sm.weight(l);
      mlp.bias(l) = sm.bias(l);
    }
    CHECK(sage_forward(sm, g, x) == mlp_forward(mlp, x));
  }
}

TEST_CASE("parameter counts") {
  const std::vector<Activation> acts(4, Activation::kRelu);
  CHECK(init_model(Arch::kMlp, {141, 256, 256, 256, 2}, acts, 1).parameter_count() == 168450);
  CHECK(init_model(Arch::kGcn, {141, 256, 256, 256, 2}, acts, 1).parameter_count() == 168450);
  CHECK(init_model(Arch::kSage, {140, 256, 256, 256, 2}, acts, 1).parameter_count() == 335618);
  CHECK_THROWS_AS(init_model(Arch::kMlp, {4}, {}, 1), Error);
  CHECK_THROWS_AS(init_model(Arch::kMlp, {4, 2}, {}, 1), Error);
  CHECK(init_model(Arch::kSage, {4, 3, 2}, {Activation::kRelu, Activation::kIdentity}, 9).params ==
        init_model(Arch::kSage, {4, 3, 2}, {Activation::kRelu, Activation::kIdentity}, 9).params);
  // glorot bound
  auto m = init_model(Arch::kMlp, {10, 30}, {Activation::kIdentity}, 2);
  const double bound = std::sqrt(6.0 / 40);
  for (double v : m.weight(0).data()) CHECK(std::abs(v) <= bound);
  for (double v : m.bias(0).data()) CHECK(v == 0.0);
}

TEST_CASE("equivariance under node relabeling") {
  Rng rng(10);
  for (Arch arch : {Arch::kMlp, Arch::kGcn, Arch::kSage}) {
    for (int rep = 0; rep < 10; ++rep) {
      const std::size_t n = 5 + rng.index(15);
      auto g = oracle::random_graph(n, 0.3, rng);
      auto m = random_model(arch, {4, 6, 3}, rng);
      Tensor v = oracle::random_tensor(n, 4, rng);
      auto pi = Permutation::random(n, rng);
      auto pg = apply_permutation(g, pi);
      Tensor pv(n, 4);
      for (NodeId i = 0; i < n; ++i)
        for (std::size_t c = 0; c < 4; ++c) pv(pi(i), c) = v(i, c);
      auto z = forward(m, g, v), pz = forward(m, pg, pv);
      double worst = 0;
      for (NodeId i = 0; i < n; ++i)
        for (std::size_t c = 0; c < 3; ++c) worst = std::max(worst, std::abs(pz(pi(i), c) - z(i, c)));
      CHECK(worst < 1e-10);
    }
  }
}

TEST_CASE("encoder gradients") {
  Rng rng(20);
  for (Arch arch : {Arch::kMlp, Arch::kGcn, Arch::kSage}) {
    for (int rep = 0; rep < 7; ++rep) {
      auto g = oracle::random_graph(6, 0.4, rng);
      auto m = random_model(arch, {3, 4, 2}, rng);
      m.activations[0] = rep % 2 ? Activation::kSigmoid : Activation::kTanh;
      Tape t;
      auto params = parameter_leaves(t, m);
      Var x = t.leaf(oracle::random_tensor(6, 3, rng));
      auto prop = propagation_for(m, g);
      Var z = encode(t, m, params, prop ? &*prop : nullptr, x);
      Var out = t.sum(t.mul_const(z, oracle::random_tensor(6, 2, rng)));
      std::vector<Var> all(params.begin(), params.end());
      all.push_back(x);
      CHECK(oracle::gradient_error(t, all, out) < 1e-5);
    }
  }
}

TEST_CASE("model json round trip") {
  auto m = init_model(Arch::kSage, {3, 4, 2}, {Activation::kRelu, Activation::kIdentity}, 5, Aggregation::kSum);
  auto back = model_from_json(nlohmann::json::parse(model_to_json(m).dump()));
  CHECK(back.params == m.params);
  CHECK(back.dims == m.dims);
  CHECK(back.aggregation == Aggregation::kSum);
  CHECK(back.activations == m.activations);
}

TEST_CASE("feature encoder") {
  FeatureSchema schema({categorical_column("c", {"a", "b", "c"}), continuous_column("x", 0, 100),
                        categorical_column("y", {"n", "y"})});
  NodeTable t(schema, 3, {0, 10, 1, 2, 30, 0, 1, 20, 1});
  auto enc = FeatureEncoder::fit(t, {}, std::string("y"));
  CHECK(enc.width() == 4);
  auto x = enc.encode(t);
  CHECK(x(0, 0) == 1.0);
  CHECK(x(1, 2) == 1.0);
  CHECK(x(0, 3) == 0.0);
  CHECK(x(1, 3) == 1.0);
  CHECK(x(2, 3) == 0.5);
  std::vector<NodeId> rows{0, 2};
  auto train_only = FeatureEncoder::fit(t, rows);
  CHECK(train_only.encode(t)(1, 3) == 2.0);  // scaled by the fitted rows, not clipped
  auto back = encoder_from_json(nlohmann::json::parse(encoder_to_json(enc).dump()));
  CHECK(back.encode(t) == x);
}

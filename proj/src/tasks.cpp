#include "socgen/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "socgen/error.hpp"

namespace socgen {

namespace {

constexpr double kLogFloor = 1e-12;
constexpr std::size_t kHistogramBins = 10;

void histogram_add(std::vector<std::size_t>& hist, double p) {
  auto bin = static_cast<std::size_t>(p * kHistogramBins);
  hist[std::min(bin, kHistogramBins - 1)]++;
}

std::vector<double> to_probs(const Tensor& logits) {
  std::vector<double> out(logits.size());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row(r);
    const double top = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - top);
    const double log_z = std::log(z) + top;
    for (std::size_t c = 0; c < logits.cols(); ++c) out[r * logits.cols() + c] = std::exp(row[c] - log_z);
  }
  return out;
}

std::vector<std::size_t> order_by_score(std::span<const double> scores, bool descending) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return descending ? scores[a] > scores[b] : scores[a] < scores[b];
  });
  return idx;
}

void check_scores(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) fail(Errc::kDimensionError, "scores and labels differ in length");
}

}  // namespace

nlohmann::json report_to_json(const EvalReport& r) {
  auto num = [](double v) -> nlohmann::json { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  nlohmann::json roc = nlohmann::json::array();
  for (const auto& [f, t] : r.roc) roc.push_back({f, t});
  return {{"loss", num(r.loss)},
          {"accuracy", num(r.accuracy)},
          {"auc", num(r.auc)},
          {"average_precision", num(r.average_precision)},
          {"roc", roc},
          {"hist_positive", r.hist_positive},
          {"hist_negative", r.hist_negative}};
}

// ---------------------------------------------------------------------------

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_scores(scores, labels);
  const auto idx = order_by_score(scores, false);
  double n_pos = 0, n_neg = 0, rank_sum = 0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (labels[idx[k]]) {
        rank_sum += avg_rank;
        n_pos += 1;
      } else {
        n_neg += 1;
      }
    }
    i = j;
  }
  if (n_pos == 0 || n_neg == 0) return NAN;
  return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg);
}

double average_precision(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_scores(scores, labels);
  const double total_pos = static_cast<double>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
  if (total_pos == 0) return NAN;
  const auto idx = order_by_score(scores, true);
  double tp = 0, fp = 0, prev_recall = 0, ap = 0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] ? tp : fp) += 1;
      ++j;
    }
    const double recall = tp / total_pos;
    ap += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
    i = j;
  }
  return ap;
}

std::vector<std::pair<double, double>> roc_curve(std::span<const double> scores,
                                                 std::span<const std::uint8_t> labels) {
  check_scores(scores, labels);
  const double p = static_cast<double>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
  const double n = static_cast<double>(labels.size()) - p;
  std::vector<std::pair<double, double>> pts{{0.0, 0.0}};
  const auto idx = order_by_score(scores, true);
  double tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] ? tp : fp) += 1;
      ++j;
    }
    pts.emplace_back(n > 0 ? fp / n : 0.0, p > 0 ? tp / p : 0.0);
    i = j;
  }
  return pts;
}

// ---------------------------------------------------------------------------

std::vector<std::optional<std::uint32_t>> node_labels(const NodeTable& table, const std::string& target) {
  const std::size_t col = table.schema().require(target);
  if (!table.schema().column(col).categorical())
    fail(Errc::kTypeError, "target '" + target + "' must be categorical");
  std::vector<std::optional<std::uint32_t>> out(table.rows());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const double v = table.at(r, col);
    if (!NodeTable::is_missing(v)) out[r] = static_cast<std::uint32_t>(v);
  }
  return out;
}

Tensor predict_class_proba(const ClassifierModel& model, const AttributedGraph& graph, std::span<const NodeId> nodes) {
  const Tensor x = model.features.encode(graph.nodes());
  const Tensor logits = forward(model.encoder, graph, x);
  const auto probs = to_probs(logits);
  const std::size_t c = logits.cols();
  if (nodes.empty()) return Tensor(logits.rows(), c, probs);
  Tensor out(nodes.size(), c);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (nodes[k] >= logits.rows()) fail(Errc::kIndexError, "node out of range");
    for (std::size_t j = 0; j < c; ++j) out(k, j) = probs[nodes[k] * c + j];
  }
  return out;
}

double classification_loss(const Tensor& probs, std::span<const std::uint32_t> labels, std::span<const NodeId> nodes) {
  if (labels.size() != probs.rows()) fail(Errc::kDimensionError, "one label per probability row expected");
  double loss = 0.0;
  for (NodeId i : nodes) {
    if (i >= probs.rows()) fail(Errc::kIndexError, "node out of range");
    const auto row = probs.row(i);
    double s = 0.0;
    for (double p : row) s += p;
    if (std::abs(s - 1.0) > 1e-9) fail(Errc::kValueError, "probability row " + std::to_string(i) + " sums to " +
                                                              std::to_string(s));
    if (labels[i] >= probs.cols()) fail(Errc::kIndexError, "label out of range");
    loss -= std::log(row[labels[i]]);
  }
  return loss;
}

Var record_classification_loss(Tape& tape, Var logits, const Tensor& onehot) {
  return tape.scale(tape.sum(tape.mul_const(tape.log_softmax_rows(logits), onehot)), -1.0);
}

namespace {

Tensor gather_rows(const Tensor& x, std::span<const NodeId> rows) {
  Tensor out(rows.size(), x.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto src = x.row(rows[k]);
    std::copy(src.begin(), src.end(), out.row(k).begin());
  }
  return out;
}

std::vector<Activation> layer_activations(std::size_t hidden_layers, Activation act) {
  std::vector<Activation> acts(hidden_layers, act);
  acts.push_back(Activation::kIdentity);
  return acts;
}

double accuracy_of(const Tensor& probs, std::span<const std::optional<std::uint32_t>> labels) {
  std::size_t hit = 0, total = 0;
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    if (!labels[r]) continue;
    const auto row = probs.row(r);
    const auto best = static_cast<std::uint32_t>(std::max_element(row.begin(), row.end()) - row.begin());
    hit += best == *labels[r];
    ++total;
  }
  return total ? static_cast<double>(hit) / static_cast<double>(total) : NAN;
}

}  // namespace

EvalReport evaluate_classifier(const ClassifierModel& model, const AttributedGraph& graph) {
  EvalReport r;
  const auto labels = node_labels(graph.nodes(), model.target);
  const Tensor probs = predict_class_proba(model, graph);
  r.accuracy = accuracy_of(probs, labels);
  std::vector<std::uint32_t> dense(labels.size(), 0);
  std::vector<NodeId> labelled;
  for (NodeId i = 0; i < labels.size(); ++i)
    if (labels[i]) {
      dense[i] = *labels[i];
      labelled.push_back(i);
    }
  r.loss = labelled.empty() ? NAN : classification_loss(probs, dense, labelled) / static_cast<double>(labelled.size());
  if (probs.cols() == 2) {
    std::vector<double> scores;
    std::vector<std::uint8_t> y;
    r.hist_positive.assign(kHistogramBins, 0);
    r.hist_negative.assign(kHistogramBins, 0);
    for (NodeId i : labelled) {
      scores.push_back(probs(i, 1));
      y.push_back(dense[i] == 1);
      histogram_add(dense[i] == 1 ? r.hist_positive : r.hist_negative, probs(i, 1));
    }
    r.auc = roc_auc(scores, y);
    r.average_precision = average_precision(scores, y);
    r.roc = roc_curve(scores, y);
  }
  return r;
}

ClassifierResult train_classifier(const AttributedGraph& graph, const std::string& target, Arch arch,
                                  const ClassifierConfig& config) {
  const auto& schema = graph.nodes().schema();
  const auto& target_col = schema.column(schema.require(target));
  if (!target_col.categorical()) fail(Errc::kTypeError, "target '" + target + "' must be categorical");
  const std::size_t num_classes = target_col.level_count();
  if (num_classes < 2) fail(Errc::kValueError, "target needs at least two classes");
  const auto labels = node_labels(graph.nodes(), target);

  ClassifierResult result;
  result.split = split_nodes(graph, config.train_frac, mix_seed(config.seed, 1));
  const auto& split = result.split;

  std::vector<NodeId> labelled_train;
  for (NodeId v : split.train_nodes)
    if (labels[v]) labelled_train.push_back(v);
  if (labelled_train.empty()) fail(Errc::kInsufficientData, "no labelled training nodes");

  ClassifierModel& model = result.model;
  model.target = target;
  model.classes = target_col.levels();
  model.features = FeatureEncoder::fit(graph.nodes(), labelled_train, target);
  std::vector<std::size_t> dims{model.features.width()};
  dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
  dims.push_back(num_classes);
  model.encoder = init_model(arch, dims, layer_activations(config.hidden.size(), config.activation),
                             mix_seed(config.seed, 2), config.aggregation);

  const Tensor x_all = model.features.encode(graph.nodes());
  const Subgraph train_sub = induced_subgraph(graph, split.train_nodes);
  const Subgraph test_sub = induced_subgraph(graph, split.test_nodes);
  Rng rng(mix_seed(config.seed, 3));
  AdamState adam(AdamConfig{config.learning_rate}, model.encoder.params);

  const std::size_t n_train = split.train_nodes.size();
  std::size_t batches = config.batches_per_epoch;
  if (batches == 0) {
    const std::size_t per = arch == Arch::kMlp ? config.batch_size : config.num_roots;
    batches = std::max<std::size_t>(1, (n_train + per - 1) / std::max<std::size_t>(per, 1));
  }

  std::vector<NodeId> order(n_train);
  std::iota(order.begin(), order.end(), NodeId{0});
  std::size_t cursor = n_train;  // forces a shuffle on first use

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::size_t used = 0;
    for (std::size_t b = 0; b < batches; ++b) {
      // local ids within the training subgraph
      std::vector<NodeId> local;
      std::optional<Propagation> prop;
      if (arch == Arch::kMlp) {
        const std::size_t size = std::min(config.batch_size, n_train);
        for (std::size_t k = 0; k < size; ++k) {
          if (cursor == n_train) {
            rng.shuffle(order.begin(), order.end());
            cursor = 0;
          }
          local.push_back(order[cursor++]);
        }
      } else {
        const auto sample = random_walk_batch(train_sub.graph, config.num_roots, config.walk_length, rng);
        local = sample.nodes;
        prop = propagation_for(model.encoder, materialize(train_sub.graph, sample).graph);
      }
      std::vector<NodeId> parent(local.size());
      Tensor onehot(local.size(), num_classes);
      std::size_t count = 0;
      for (std::size_t k = 0; k < local.size(); ++k) {
        parent[k] = train_sub.original_ids[local[k]];
        if (labels[parent[k]]) {
          onehot(k, *labels[parent[k]]) = 1.0;
          ++count;
        }
      }
      if (count == 0) continue;
      Tape tape;
      const auto params = parameter_leaves(tape, model.encoder);
      const Var x = tape.leaf(gather_rows(x_all, parent));
      const Var logits = encode(tape, model.encoder, params, prop ? &*prop : nullptr, x);
      const Var loss = tape.scale(record_classification_loss(tape, logits, onehot), 1.0 / static_cast<double>(count));
      tape.forward();
      tape.backward(loss);
      std::vector<Tensor> grads;
      for (Var p : params) grads.push_back(tape.grad(p));
      adam.step(model.encoder.params, grads);
      epoch_loss += tape.value(loss).item();
      ++used;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = used ? epoch_loss / static_cast<double>(used) : NAN;
    rec.train_accuracy = evaluate_classifier(model, train_sub.graph).accuracy;
    if (test_sub.graph.num_nodes() > 0) rec.test_accuracy = evaluate_classifier(model, test_sub.graph).accuracy;
    result.curve.push_back(rec);
  }
  if (test_sub.graph.num_nodes() > 0) result.test = evaluate_classifier(model, test_sub.graph);
  return result;
}

NodeTable impute_node_attribute(const ClassifierModel& model, const AttributedGraph& graph,
                                std::span<const NodeId> missing) {
  NodeTable out = graph.nodes();
  if (missing.empty()) return out;
  const std::size_t col = out.schema().require(model.target);
  const Tensor probs = predict_class_proba(model, graph, missing);
  for (std::size_t k = 0; k < missing.size(); ++k) {
    const auto row = probs.row(k);
    const auto best = std::max_element(row.begin(), row.end()) - row.begin();  // first maximum
    out.set(missing[k], col, static_cast<double>(best));
  }
  return out;
}

nlohmann::json classifier_to_json(const ClassifierModel& model) {
  return {{"kind", "classifier"},
          {"encoder", model_to_json(model.encoder)},
          {"features", encoder_to_json(model.features)},
          {"target", model.target},
          {"classes", model.classes}};
}

ClassifierModel classifier_from_json(const nlohmann::json& j) {
  ClassifierModel m;
  try {
    m.encoder = model_from_json(j.at("encoder"));
    m.features = encoder_from_json(j.at("features"));
    m.target = j.at("target").get<std::string>();
    m.classes = j.at("classes").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::kParseError, std::string("bad classifier json: ") + e.what());
  }
  if (m.encoder.input_dim() != m.features.width() || m.encoder.output_dim() != m.classes.size())
    fail(Errc::kDimensionError, "classifier encoder does not match its feature encoding");
  return m;
}

// ---------------------------------------------------------------------------

double decode_edge_prob(std::span<const double> zi, std::span<const double> zj, double alpha, double beta) {
  if (zi.size() != zj.size()) fail(Errc::kDimensionError, "embedding lengths differ");
  double dot = 0.0;
  for (std::size_t c = 0; c < zi.size(); ++c) dot += zi[c] * zj[c];
  return sigmoid(alpha * dot + beta);
}

Tensor embed(const GaeModel& model, const AttributedGraph& graph) {
  return forward(model.encoder, graph, model.features.encode(graph.nodes()));
}

std::vector<double> edge_probabilities(const Tensor& z, std::span<const Edge> pairs, double alpha, double beta) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& e : pairs) {
    if (e.src >= z.rows() || e.dst >= z.rows()) fail(Errc::kIndexError, "pair endpoint out of range");
    out.push_back(decode_edge_prob(z.row(e.src), z.row(e.dst), alpha, beta));
  }
  return out;
}

Var record_gae_loss(Tape& tape, Var z, std::span<const Edge> pos, std::span<const Edge> neg, Var alpha, Var beta) {
  if (pos.empty() || neg.empty()) fail(Errc::kValueError, "GAE loss needs positive and negative pairs");
  const std::size_t m = pos.size() + neg.size();
  std::vector<std::uint32_t> src, dst;
  src.reserve(m);
  dst.reserve(m);
  Tensor y(m, 1), not_y(m, 1);
  for (std::size_t k = 0; k < m; ++k) {
    const Edge& e = k < pos.size() ? pos[k] : neg[k - pos.size()];
    if (e.src >= tape.rows(z) || e.dst >= tape.rows(z)) fail(Errc::kIndexError, "pair endpoint out of range");
    src.push_back(e.src);
    dst.push_back(e.dst);
    (k < pos.size() ? y : not_y)[k] = 1.0;
  }
  const Var dot = tape.row_dot(tape.gather_rows(z, std::move(src)), tape.gather_rows(z, std::move(dst)));
  const Var logit = tape.add_scalar(tape.mul_scalar(dot, alpha), beta);
  const Var ll = tape.add(tape.mul_const(tape.log_sigmoid(logit), y),
                          tape.mul_const(tape.log_sigmoid(tape.scale(logit, -1.0)), not_y));
  return tape.scale(tape.mean(ll), -1.0);
}

double gae_loss(const Tensor& z, std::span<const Edge> pos, std::span<const Edge> neg, double alpha, double beta) {
  Tape tape;
  const Var zv = tape.leaf(z);
  const Var a = tape.leaf(Tensor::scalar(alpha));
  const Var b = tape.leaf(Tensor::scalar(beta));
  const Var loss = record_gae_loss(tape, zv, pos, neg, a, b);
  tape.forward();
  return tape.value(loss).item();
}

Var record_mixing_matrix(Tape& tape, Var z, Var alpha, Var beta, std::span<const std::uint32_t> labels,
                         std::size_t num_levels, const MixingEstimate& est) {
  const std::size_t n = tape.rows(z);
  const std::size_t k = num_levels;
  if (labels.size() != n) fail(Errc::kDimensionError, "one label per embedding row expected");
  if (n < 2) fail(Errc::kValueError, "model mixing matrix needs at least two nodes");
  for (auto l : labels)
    if (l >= k) fail(Errc::kIndexError, "label out of range");

  Var folded;
  if (n <= est.max_nodes) {
    const Var logits = tape.add_scalar(tape.mul_scalar(tape.matmul(z, tape.transpose(z)), alpha), beta);
    Tensor off_diagonal(n, n, 1.0);
    for (std::size_t i = 0; i < n; ++i) off_diagonal(i, i) = 0.0;
    const Var p = tape.mul_const(tape.sigmoid(logits), std::move(off_diagonal));
    Tensor onehot(n, k);
    for (std::size_t i = 0; i < n; ++i) onehot(i, labels[i]) = 1.0;
    const Var c = tape.leaf(std::move(onehot));
    const Var s = tape.matmul(tape.transpose(c), tape.matmul(p, c));
    Tensor fold(k, k);
    for (std::size_t a = 0; a < k; ++a) {
      fold(a, a) = 0.5;
      for (std::size_t b = a + 1; b < k; ++b) fold(a, b) = 1.0;
    }
    folded = tape.mul_const(tape.add(s, tape.transpose(s)), std::move(fold));
  } else {
    Rng rng(est.seed);
    std::vector<std::uint32_t> src(est.sample_pairs), dst(est.sample_pairs), cell(est.sample_pairs);
    for (std::size_t q = 0; q < est.sample_pairs; ++q) {
      const auto i = static_cast<std::uint32_t>(rng.index(n));
      auto j = static_cast<std::uint32_t>(rng.index(n - 1));
      if (j >= i) ++j;
      src[q] = i;
      dst[q] = j;
      const auto a = std::min(labels[i], labels[j]), b = std::max(labels[i], labels[j]);
      cell[q] = static_cast<std::uint32_t>(a * k + b);
    }
    const Var dot = tape.row_dot(tape.gather_rows(z, std::move(src)), tape.gather_rows(z, std::move(dst)));
    const Var p = tape.sigmoid(tape.add_scalar(tape.mul_scalar(dot, alpha), beta));
    folded = tape.reshape(tape.segment_sum(p, std::move(cell), k * k), k, k);
  }
  return tape.div_scalar(folded, tape.sum(folded));
}

Tensor model_mixing_matrix(const Tensor& z, double alpha, double beta, std::span<const std::uint32_t> labels,
                           std::size_t num_levels, const MixingEstimate& est) {
  Tape tape;
  const Var zv = tape.leaf(z);
  const Var a = tape.leaf(Tensor::scalar(alpha));
  const Var b = tape.leaf(Tensor::scalar(beta));
  const Var m = record_mixing_matrix(tape, zv, a, b, labels, num_levels, est);
  tape.forward();
  return tape.value(m);
}

Tensor model_mixing_matrix(const Tensor& z, double alpha, double beta, const NodeTable& table,
                           const std::string& attribute, const MixingEstimate& est) {
  const auto lab = node_labels(table, attribute);
  std::vector<std::uint32_t> dense;
  dense.reserve(lab.size());
  for (const auto& l : lab) {
    if (!l) fail(Errc::kValueError, "missing value in mixing attribute '" + attribute + "'");
    dense.push_back(*l);
  }
  const auto k = table.schema().column(table.schema().require(attribute)).level_count();
  return model_mixing_matrix(z, alpha, beta, dense, k, est);
}

double mixing_cross_entropy(const Tensor& target, const Tensor& model) {
  if (!target.same_shape(model)) fail(Errc::kDimensionError, "mixing matrices differ in shape");
  double h = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) h -= target[i] * std::log(model[i] + kLogFloor);
  return h;
}

Var record_regularized_gae_loss(Tape& tape, Var z, std::span<const Edge> pos, std::span<const Edge> neg, Var alpha,
                                Var beta, const Tensor& target, double lambda, std::span<const std::uint32_t> labels,
                                const MixingEstimate& est) {
  if (!(lambda >= 0.0)) fail(Errc::kValueError, "lambda must be non-negative");
  const Var base = record_gae_loss(tape, z, pos, neg, alpha, beta);
  if (lambda == 0.0) return base;
  if (target.rows() != target.cols()) fail(Errc::kDimensionError, "target mixing matrix must be square");
  const Var m = record_mixing_matrix(tape, z, alpha, beta, labels, target.rows(), est);
  const Var h = tape.scale(tape.sum(tape.mul_const(tape.log(tape.add_const(m, kLogFloor)), target)), -lambda);
  return tape.add(base, h);
}

double regularized_gae_loss(const Tensor& z, std::span<const Edge> pos, std::span<const Edge> neg, double alpha,
                            double beta, const Tensor& target, double lambda, std::span<const std::uint32_t> labels,
                            const MixingEstimate& est) {
  Tape tape;
  const Var zv = tape.leaf(z);
  const Var a = tape.leaf(Tensor::scalar(alpha));
  const Var b = tape.leaf(Tensor::scalar(beta));
  const Var loss = record_regularized_gae_loss(tape, zv, pos, neg, a, b, target, lambda, labels, est);
  tape.forward();
  return tape.value(loss).item();
}

EvalReport evaluate_link_predictor(const GaeModel& model, const AttributedGraph& graph, std::span<const Edge> test_pos,
                                   std::span<const Edge> test_neg) {
  const Tensor z = embed(model, graph);
  EvalReport r;
  const auto pp = edge_probabilities(z, test_pos, model.alpha, model.beta);
  const auto pn = edge_probabilities(z, test_neg, model.alpha, model.beta);
  std::vector<double> scores(pp);
  scores.insert(scores.end(), pn.begin(), pn.end());
  std::vector<std::uint8_t> y(pp.size(), 1);
  y.resize(scores.size(), 0);
  r.hist_positive.assign(kHistogramBins, 0);
  r.hist_negative.assign(kHistogramBins, 0);
  for (double p : pp) histogram_add(r.hist_positive, p);
  for (double p : pn) histogram_add(r.hist_negative, p);
  if (!test_pos.empty() && !test_neg.empty()) r.loss = gae_loss(z, test_pos, test_neg, model.alpha, model.beta);
  r.auc = roc_auc(scores, y);
  r.average_precision = average_precision(scores, y);
  r.roc = roc_curve(scores, y);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) hit += (scores[i] >= 0.5) == (y[i] == 1);
  r.accuracy = scores.empty() ? NAN : static_cast<double>(hit) / static_cast<double>(scores.size());
  return r;
}

GaeResult train_gae(const AttributedGraph& graph, Arch arch, const GaeConfig& config) {
  if (graph.num_edges() == 0) fail(Errc::kValueError, "link prediction needs at least one edge");
  GaeResult result;
  result.split = split_edges(graph, config.train_frac, mix_seed(config.seed, 1));
  const AttributedGraph train_graph(graph.nodes(), EdgeList(result.split.train_edges));
  Rng rng(mix_seed(config.seed, 3));
  {
    Rng neg_rng(mix_seed(config.seed, 4));
    result.test_negatives = sample_negative_edges(graph, result.split.test_edges.size(), neg_rng);
  }

  std::vector<std::uint32_t> labels;
  if (config.lambda > 0.0) {
    if (!config.target_mixing) fail(Errc::kValueError, "lambda > 0 needs a target mixing matrix");
    for (const auto& l : node_labels(graph.nodes(), config.mixing_attribute)) {
      if (!l) fail(Errc::kValueError, "missing value in mixing attribute");
      labels.push_back(*l);
    }
  }

  GaeModel& model = result.model;
  model.features = FeatureEncoder::fit(graph.nodes());
  std::vector<std::size_t> dims{model.features.width()};
  dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
  dims.push_back(config.embedding_dim);
  model.encoder = init_model(arch, dims, layer_activations(config.hidden.size(), config.activation),
                             mix_seed(config.seed, 2), config.aggregation);
  const Tensor x_all = model.features.encode(graph.nodes());

  // encoder tensors followed by alpha and beta
  std::vector<Tensor> params = model.encoder.params;
  params.push_back(Tensor::scalar(model.alpha));
  params.push_back(Tensor::scalar(model.beta));
  AdamState adam(AdamConfig{config.learning_rate}, params);
  const std::size_t n_enc = model.encoder.params.size();

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::size_t used = 0;
    for (std::size_t b = 0; b < config.batches_per_epoch; ++b) {
      const auto sample = random_walk_batch(train_graph, config.num_roots, config.walk_length, rng);
      const Subgraph sub = materialize(train_graph, sample);
      const auto& pos = sub.graph.edges();
      if (pos.empty()) continue;
      const std::uint64_t room = pair_capacity(sub.graph.num_nodes()) - pos.size();
      const auto want = std::min<std::uint64_t>(room, pos.size() * config.negatives_per_positive);
      if (want == 0) continue;
      const auto neg = sample_negative_edges(sub.graph, static_cast<std::size_t>(want), rng);
      const auto prop = propagation_for(model.encoder, sub.graph);

      Tape tape;
      std::vector<Var> leaves;
      for (const auto& p : params) leaves.push_back(tape.leaf(p));
      const Var x = tape.leaf(gather_rows(x_all, sub.original_ids));
      const Var z = encode(tape, model.encoder, std::span<const Var>(leaves.data(), n_enc), prop ? &*prop : nullptr, x);
      Var loss;
      if (config.lambda > 0.0) {
        std::vector<std::uint32_t> batch_labels;
        for (NodeId v : sub.original_ids) batch_labels.push_back(labels[v]);
        loss = record_regularized_gae_loss(tape, z, pos, neg, leaves[n_enc], leaves[n_enc + 1], *config.target_mixing,
                                           config.lambda, batch_labels, MixingEstimate{2000, 200000, rng.next()});
      } else {
        loss = record_gae_loss(tape, z, pos, neg, leaves[n_enc], leaves[n_enc + 1]);
      }
      tape.forward();
      tape.backward(loss);
      std::vector<Tensor> grads;
      for (Var v : leaves) grads.push_back(tape.grad(v));
      adam.step(params, grads);
      epoch_loss += tape.value(loss).item();
      ++used;
    }
    std::copy(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(n_enc), model.encoder.params.begin());
    model.alpha = params[n_enc].item();
    model.beta = params[n_enc + 1].item();

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = used ? epoch_loss / static_cast<double>(used) : NAN;
    if (config.eval_every > 0 && (epoch % config.eval_every == 0 || epoch == config.epochs) &&
        !result.split.test_edges.empty()) {
      const auto r = evaluate_link_predictor(model, train_graph, result.split.test_edges, result.test_negatives);
      rec.auc = r.auc;
      rec.average_precision = r.average_precision;
    }
    result.curve.push_back(rec);
  }
  if (!result.split.test_edges.empty())
    result.test = evaluate_link_predictor(model, train_graph, result.split.test_edges, result.test_negatives);
  return result;
}

nlohmann::json gae_to_json(const GaeModel& model) {
  return {{"kind", "gae"},
          {"encoder", model_to_json(model.encoder)},
          {"features", encoder_to_json(model.features)},
          {"alpha", model.alpha},
          {"beta", model.beta}};
}

GaeModel gae_from_json(const nlohmann::json& j) {
  GaeModel m;
  try {
    m.encoder = model_from_json(j.at("encoder"));
    m.features = encoder_from_json(j.at("features"));
    m.alpha = j.at("alpha").get<double>();
    m.beta = j.at("beta").get<double>();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::kParseError, std::string("bad gae json: ") + e.what());
  }
  if (m.encoder.input_dim() != m.features.width())
    fail(Errc::kDimensionError, "gae encoder does not match its feature encoding");
  return m;
}

}  // namespace socgen

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "socgen/autodiff.hpp"
#include "socgen/gnn.hpp"
#include "socgen/graph.hpp"
#include "socgen/sampling.hpp"

namespace socgen {

struct EvalReport {
  double loss = 0.0;
  double accuracy = NAN;  // classification
  double auc = NAN;       // binary scores only
  double average_precision = NAN;
  std::vector<std::pair<double, double>> roc;  // (fpr, tpr), from (0,0) to (1,1)
  std::vector<std::size_t> hist_positive;      // probability histogram, 10 bins
  std::vector<std::size_t> hist_negative;
};

nlohmann::json report_to_json(const EvalReport& r);

/// One row per epoch. Unused metrics stay NaN.
struct EpochRecord {
  std::size_t epoch = 0;
  double loss = NAN;
  double train_accuracy = NAN;
  double test_accuracy = NAN;
  double auc = NAN;
  double average_precision = NAN;
};

// ---------------------------------------------------------------------------
// Metrics

/// Mann-Whitney AUC with average ranks for ties. labels are 0/1. NaN when a
/// class is absent.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);
/// Sum over distinct thresholds of (R_k - R_{k-1}) P_k.
double average_precision(std::span<const double> scores, std::span<const std::uint8_t> labels);
/// One point per distinct threshold, monotone in both coordinates.
std::vector<std::pair<double, double>> roc_curve(std::span<const double> scores,
                                                 std::span<const std::uint8_t> labels);

// ---------------------------------------------------------------------------
// Node classification

struct ClassifierModel {
  GnnModel encoder;          // output width = number of classes
  FeatureEncoder features;   // excludes the target column
  std::string target;
  std::vector<std::string> classes;
};

/// Target level index per node; missing cells map to std::nullopt.
std::vector<std::optional<std::uint32_t>> node_labels(const NodeTable& table, const std::string& target);

/// Softmax of the encoder output for the given nodes (all nodes when empty).
/// SchemaError when the graph's schema differs from the model's.
Tensor predict_class_proba(const ClassifierModel& model, const AttributedGraph& graph,
                           std::span<const NodeId> nodes = {});

/// -sum_{i in nodes} ln P[i, labels[i]]. labels is indexed by row of P.
/// ValueError if an evaluated row does not sum to 1 within 1e-9.
double classification_loss(const Tensor& probs, std::span<const std::uint32_t> labels,
                           std::span<const NodeId> nodes);

/// Cross-entropy of row-wise softmax(logits) against a one-hot mask (rows
/// with an all-zero mask contribute nothing), summed.
Var record_classification_loss(Tape& tape, Var logits, const Tensor& onehot);

struct ClassifierConfig {
  std::vector<std::size_t> hidden{256, 256, 256};
  Activation activation = Activation::kRelu;
  Aggregation aggregation = Aggregation::kMean;
  std::size_t epochs = 50;
  double learning_rate = 1e-3;
  double train_frac = 0.8;
  std::size_t num_roots = 512;  // random-walk batches (GNNs)
  std::size_t walk_length = 3;
  std::size_t batch_size = 512;  // row batches (MLP)
  std::size_t batches_per_epoch = 0;  // 0 = enough to cover the training nodes once
  std::uint64_t seed = 0;
};

struct ClassifierResult {
  ClassifierModel model;
  std::vector<EpochRecord> curve;
  NodeSplit split;
  EvalReport test;  // on the test-test subgraph
};

/// Trains on the subgraph induced by the training nodes and evaluates on the
/// subgraph induced by the test nodes; train-test edges are never used.
/// TypeError when target is continuous.
ClassifierResult train_classifier(const AttributedGraph& graph, const std::string& target, Arch arch,
                                  const ClassifierConfig& config);

/// Evaluates on the given graph (all nodes with a label).
EvalReport evaluate_classifier(const ClassifierModel& model, const AttributedGraph& graph);

/// Copy of the node table with target cells of `missing` replaced by the
/// argmax class (ties to the lowest level index).
NodeTable impute_node_attribute(const ClassifierModel& model, const AttributedGraph& graph,
                                std::span<const NodeId> missing);

nlohmann::json classifier_to_json(const ClassifierModel& model);
ClassifierModel classifier_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Link prediction

struct GaeModel {
  GnnModel encoder;
  FeatureEncoder features;
  double alpha = 1.0;
  double beta = 0.0;
};

/// sigma(alpha <z_i, z_j> + beta). DimensionError on length mismatch.
double decode_edge_prob(std::span<const double> zi, std::span<const double> zj, double alpha, double beta);

Tensor embed(const GaeModel& model, const AttributedGraph& graph);
/// Edge probabilities for the given pairs under embeddings z.
std::vector<double> edge_probabilities(const Tensor& z, std::span<const Edge> pairs, double alpha, double beta);

/// Mean binary cross-entropy over positives (target 1) and negatives (target 0).
Var record_gae_loss(Tape& tape, Var z, std::span<const Edge> pos, std::span<const Edge> neg, Var alpha, Var beta);
double gae_loss(const Tensor& z, std::span<const Edge> pos, std::span<const Edge> neg, double alpha, double beta);

/// Exact all-pairs evaluation up to max_nodes, otherwise a uniform sample of
/// sample_pairs ordered pairs.
struct MixingEstimate {
  std::size_t max_nodes = 2000;
  std::size_t sample_pairs = 1000000;
  std::uint64_t seed = 0;
};

/// Model mixing matrix, K x K in the same folded upper-triangular form as the
/// joint mixing matrix of an observed graph: with S_ab the summed edge
/// probability over ordered pairs i != j with labels (a, b) and S the total,
/// entry (a, a) is S_aa / S and entry (a, b), a < b, is (S_ab + S_ba) / S.
Var record_mixing_matrix(Tape& tape, Var z, Var alpha, Var beta, std::span<const std::uint32_t> labels,
                         std::size_t num_levels, const MixingEstimate& est = {});
Tensor model_mixing_matrix(const Tensor& z, double alpha, double beta, std::span<const std::uint32_t> labels,
                           std::size_t num_levels, const MixingEstimate& est = {});
/// Labels taken from a categorical column; TypeError for a continuous one.
Tensor model_mixing_matrix(const Tensor& z, double alpha, double beta, const NodeTable& table,
                           const std::string& attribute, const MixingEstimate& est = {});

/// -sum_ab T_ab ln(M_ab + 1e-12).
double mixing_cross_entropy(const Tensor& target, const Tensor& model);

/// GAE loss plus lambda * mixing cross-entropy. With lambda == 0 the
/// regularizer is not recorded and the result is the plain GAE loss.
Var record_regularized_gae_loss(Tape& tape, Var z, std::span<const Edge> pos, std::span<const Edge> neg, Var alpha,
                                Var beta, const Tensor& target, double lambda, std::span<const std::uint32_t> labels,
                                const MixingEstimate& est = {});
double regularized_gae_loss(const Tensor& z, std::span<const Edge> pos, std::span<const Edge> neg, double alpha,
                            double beta, const Tensor& target, double lambda, std::span<const std::uint32_t> labels,
                            const MixingEstimate& est = {});

struct GaeConfig {
  std::vector<std::size_t> hidden{256, 256};
  std::size_t embedding_dim = 64;
  Activation activation = Activation::kRelu;
  Aggregation aggregation = Aggregation::kMean;
  std::size_t epochs = 500;
  double learning_rate = 1e-3;
  double train_frac = 0.5;
  std::size_t negatives_per_positive = 1;
  std::size_t num_roots = 512;
  std::size_t walk_length = 3;
  std::size_t batches_per_epoch = 1;
  double lambda = 0.0;
  std::optional<Tensor> target_mixing;  // required when lambda > 0
  std::string mixing_attribute;
  std::size_t eval_every = 1;  // 0 disables per-epoch evaluation
  std::uint64_t seed = 0;
};

struct GaeResult {
  GaeModel model;
  std::vector<EpochRecord> curve;
  EdgeSplit split;
  std::vector<Edge> test_negatives;
  EvalReport test;
};

/// ValueError for a graph without edges.
GaeResult train_gae(const AttributedGraph& graph, Arch arch, const GaeConfig& config);

/// Scores test pairs with embeddings computed on `graph` (the message-passing
/// graph, normally the training edges only).
EvalReport evaluate_link_predictor(const GaeModel& model, const AttributedGraph& graph, std::span<const Edge> test_pos,
                                   std::span<const Edge> test_neg);

nlohmann::json gae_to_json(const GaeModel& model);
GaeModel gae_from_json(const nlohmann::json& j);

}  // namespace socgen

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "socgen/autodiff.hpp"
#include "socgen/graph.hpp"

namespace socgen {

enum class Arch { kMlp, kGcn, kSage };
enum class Activation { kSigmoid, kTanh, kRelu, kIdentity };
/// Neighborhood weight for SAGE: 1 (sum) or 1/|N(i)| (mean).
enum class Aggregation { kSum, kMean };

std::string arch_name(Arch arch);
Arch parse_arch(const std::string& name);
std::string activation_name(Activation act);
Activation parse_activation(const std::string& name);
std::string aggregation_name(Aggregation agg);
Aggregation parse_aggregation(const std::string& name);

/// Encoder network. Weights are stored F_l x F_{l+1} and act on row vectors,
/// so a layer reads Z W + b. Parameters are kept flat in layer order:
/// MLP/GCN layers hold (W, b), SAGE layers hold (W1, W2, b).
struct GnnModel {
  Arch arch = Arch::kMlp;
  std::vector<std::size_t> dims;
  std::vector<Activation> activations;  // one per layer
  Aggregation aggregation = Aggregation::kMean;
  std::vector<Tensor> params;

  std::size_t num_layers() const { return dims.size() - 1; }
  std::size_t input_dim() const { return dims.front(); }
  std::size_t output_dim() const { return dims.back(); }
  std::size_t tensors_per_layer() const { return arch == Arch::kSage ? 3 : 2; }
  std::size_t parameter_count() const;

  Tensor& weight(std::size_t layer) { return params[layer * tensors_per_layer()]; }
  const Tensor& weight(std::size_t layer) const { return params[layer * tensors_per_layer()]; }
  /// SAGE only.
  Tensor& neighbor_weight(std::size_t layer) { return params[layer * 3 + 1]; }
  const Tensor& neighbor_weight(std::size_t layer) const { return params[layer * 3 + 1]; }
  Tensor& bias(std::size_t layer) { return params[layer * tensors_per_layer() + tensors_per_layer() - 1]; }
  const Tensor& bias(std::size_t layer) const {
    return params[layer * tensors_per_layer() + tensors_per_layer() - 1];
  }

  /// DimensionError when parameter shapes disagree with dims.
  void validate() const;
};

/// Glorot-uniform weights, zero biases. DimensionError for fewer than two
/// dims, a zero dim, or an activation list of the wrong length.
GnnModel init_model(Arch arch, std::vector<std::size_t> dims, std::vector<Activation> activations,
                    std::uint64_t seed, Aggregation aggregation = Aggregation::kMean);

/// Sparse propagation operator in CSR form:
/// out_i = self_weight_i * z_i + sum_p weight_p * z_{neighbor_p}.
struct Propagation {
  std::vector<std::size_t> offsets;
  std::vector<std::uint32_t> neighbor;
  std::vector<double> weight;
  std::vector<double> self_weight;

  std::size_t num_nodes() const { return self_weight.size(); }
  /// Coefficient of (i, j), 0 for non-adjacent pairs.
  double coefficient(NodeId i, NodeId j) const;
};

/// D~^-1/2 (A + I) D~^-1/2 with d~_i = degree(i) + 1.
Propagation normalized_adjacency(const AttributedGraph& graph);
/// Neighbor sum weighted by 1 or 1/|N(i)|; zero self weight.
Propagation neighbor_aggregation(const AttributedGraph& graph, Aggregation agg);

/// Operator the architecture needs, or nullopt for MLP.
std::optional<Propagation> propagation_for(const GnnModel& model, const AttributedGraph& graph);

/// Records one leaf per parameter tensor, bound to the model's values.
std::vector<Var> parameter_leaves(Tape& tape, const GnnModel& model);

/// Records the encoder on `tape`. `prop` must be present for GCN and SAGE and
/// cover tape.rows(x) nodes.
Var encode(Tape& tape, const GnnModel& model, std::span<const Var> params, const Propagation* prop, Var x);

Tensor mlp_forward(const GnnModel& model, const Tensor& x);
Tensor gcn_forward(const GnnModel& model, const AttributedGraph& graph, const Tensor& v);
Tensor sage_forward(const GnnModel& model, const AttributedGraph& graph, const Tensor& v);
/// Dispatches on model.arch.
Tensor forward(const GnnModel& model, const AttributedGraph& graph, const Tensor& v);

nlohmann::json model_to_json(const GnnModel& model);
GnnModel model_from_json(const nlohmann::json& j);
nlohmann::json tensor_to_json(const Tensor& t);
Tensor tensor_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Node feature encoding

/// Maps node-table columns to a dense matrix: categoricals one-hot, continuous
/// min-max scaled with statistics from the rows the encoder was fitted on.
/// Missing cells encode as all zeros.
struct FeatureEncoder {
  FeatureSchema schema;
  std::vector<std::size_t> columns;  // encoded column indices, in schema order
  std::vector<double> lo;            // per encoded column; unused for categoricals
  std::vector<double> hi;

  std::size_t width() const;
  /// SchemaError when table.schema() differs from the fitted schema.
  Tensor encode(const NodeTable& table) const;

  /// Fits on the given rows (all rows when empty), skipping `exclude`.
  static FeatureEncoder fit(const NodeTable& table, std::span<const NodeId> rows = {},
                            const std::optional<std::string>& exclude = std::nullopt);
};

nlohmann::json encoder_to_json(const FeatureEncoder& enc);
FeatureEncoder encoder_from_json(const nlohmann::json& j);
nlohmann::json schema_to_json(const FeatureSchema& schema);
FeatureSchema schema_from_json(const nlohmann::json& j);

}  // namespace socgen

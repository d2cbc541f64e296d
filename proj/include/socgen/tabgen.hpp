#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "socgen/gnn.hpp"
#include "socgen/graph.hpp"

namespace socgen {

enum class TabularKind { kMarginal, kEmpirical, kAdversarial };
std::string tabular_kind_name(TabularKind kind);
TabularKind parse_tabular_kind(const std::string& name);

inline constexpr std::size_t kMarginalBins = 64;

/// Per-column distribution for marginal mode: level pmf for categoricals,
/// equal-width histogram over the schema range for continuous columns.
struct ColumnMarginal {
  std::vector<double> pmf;
};

struct AdversarialConfig {
  std::size_t latent_dim = 16;
  std::vector<std::size_t> hidden{64, 64};
  std::size_t epochs = 300;
  std::size_t batch_size = 128;
  double learning_rate = 3e-4;
  double beta1 = 0.5;
  double temperature = 0.2;  // Gumbel-softmax, categorical blocks
  double real_label = 0.9;
  /// Rows per discriminator input (packing); batches are trimmed to a multiple.
  std::size_t pac = 10;
  /// Decay of the exponential moving average kept of the generator weights;
  /// the average is what gets returned. 0 returns the raw weights.
  double ema_decay = 0.999;
  std::uint64_t seed = 0;
};

struct TabularModel {
  TabularKind kind = TabularKind::kMarginal;
  FeatureSchema schema;
  std::vector<ColumnMarginal> marginals;  // marginal
  NodeTable rows;                         // empirical
  GnnModel generator;                     // adversarial: latent -> encoded row logits
  GnnModel discriminator;                 // adversarial: pac encoded rows -> 1 logit
  std::size_t latent_dim = 0;
  double temperature = 0.2;
};

/// EmptyData for a table without rows or a column without observed values.
TabularModel fit_marginal(const NodeTable& table);
TabularModel fit_empirical(const NodeTable& table);

struct AdversarialResult {
  TabularModel model;
  std::vector<double> discriminator_loss;  // per epoch
  std::vector<double> generator_loss;
};

/// Plain tabular GAN on one-hot / min-max (schema range) encoded rows.
AdversarialResult fit_adversarial(const NodeTable& table, const AdversarialConfig& config);

/// Encoded width of a row: one slot per level plus one per continuous column.
std::size_t encoded_width(const FeatureSchema& schema);
/// Encodes rows with continuous columns scaled by the schema range.
Tensor encode_rows(const NodeTable& table);
/// Generator output layer during training: Gumbel-softmax at the given
/// temperature on each categorical block (noise drawn at record time),
/// sigmoid on continuous slots.
Var record_generator_output(Tape& tape, Var logits, const FeatureSchema& schema, double temperature, Rng& rng);
/// Generator output (pre-activation) to schema-valid rows: each categorical
/// block is sampled from its softmax, continuous slots go through a sigmoid
/// and are mapped onto the schema range.
NodeTable decode_rows(const FeatureSchema& schema, const Tensor& logits, Rng& rng);

/// n i.i.d. rows. ValueError for n == 0.
NodeTable sample_population(const TabularModel& model, std::size_t n, std::uint64_t seed);

struct ColumnComparison {
  std::string name;
  double total_variation = 0.0;
  std::vector<std::string> bins;  // level names or "[lo,hi)" bin labels
  std::vector<double> real;       // frequencies
  std::vector<double> synth;
};

/// Per-column total-variation distance between empirical marginals, with the
/// aligned histograms (continuous columns use `bins` equal-width bins over the
/// schema range). Missing cells are ignored. SchemaError on schema mismatch.
/// The default of 16 bins nests in the marginal model's 64, so jitter inside a
/// model bin never crosses a comparison edge.
std::vector<ColumnComparison> compare_marginals(const NodeTable& real, const NodeTable& synth,
                                                std::size_t bins = kMarginalBins / 4);
/// Long-format CSV: column,bin,real,synth.
void write_marginals_csv(std::ostream& out, const std::vector<ColumnComparison>& cmp);

nlohmann::json tabular_to_json(const TabularModel& model);
TabularModel tabular_from_json(const nlohmann::json& j);

}  // namespace socgen

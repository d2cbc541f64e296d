#include "socgen/tabgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "socgen/error.hpp"

namespace socgen {

namespace {

std::size_t bin_index(double v, double lo, double hi, std::size_t bins) {
  if (!(hi > lo)) return 0;
  const double pos = (v - lo) / (hi - lo) * static_cast<double>(bins);
  if (pos <= 0) return 0;
  return std::min(bins - 1, static_cast<std::size_t>(pos));
}

std::size_t categorical_draw(std::span<const double> pmf, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t k = 0; k < pmf.size(); ++k) {
    if (pmf[k] <= 0) continue;
    acc += pmf[k];
    last = k;
    if (u < acc) return k;
  }
  return last;  // u landed in the rounding slack at the top
}

void require_rows(const NodeTable& table) {
  if (table.rows() == 0) fail(Errc::kEmptyData, "table has no rows");
}

struct Block {
  std::size_t offset;
  std::size_t width;
  bool categorical;
};

std::vector<Block> blocks_of(const FeatureSchema& schema) {
  std::vector<Block> out;
  std::size_t offset = 0;
  for (const auto& col : schema.columns()) {
    const std::size_t w = col.categorical() ? col.level_count() : 1;
    out.push_back({offset, w, col.categorical()});
    offset += w;
  }
  return out;
}

Tensor gaussian(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor t(rows, cols);
  for (auto& v : t.data()) v = rng.normal();
  return t;
}

std::vector<Tensor> grads_of(const Tape& tape, std::span<const Var> leaves) {
  std::vector<Tensor> g;
  g.reserve(leaves.size());
  for (Var v : leaves) g.push_back(tape.grad(v));
  return g;
}

}  // namespace

std::string tabular_kind_name(TabularKind kind) {
  switch (kind) {
    case TabularKind::kMarginal: return "marginal";
    case TabularKind::kEmpirical: return "empirical";
    case TabularKind::kAdversarial: return "adversarial";
  }
  return "?";
}

TabularKind parse_tabular_kind(const std::string& name) {
  if (name == "marginal") return TabularKind::kMarginal;
  if (name == "empirical") return TabularKind::kEmpirical;
  if (name == "adversarial") return TabularKind::kAdversarial;
  fail(Errc::kValueError, "unknown tabular model kind '" + name + "'");
}

TabularModel fit_marginal(const NodeTable& table) {
  require_rows(table);
  TabularModel m;
  m.kind = TabularKind::kMarginal;
  m.schema = table.schema();
  for (std::size_t c = 0; c < table.cols(); ++c) {
    const auto& col = m.schema.column(c);
    ColumnMarginal cm;
    cm.pmf.assign(col.categorical() ? col.level_count() : kMarginalBins, 0.0);
    double seen = 0;
    for (std::size_t r = 0; r < table.rows(); ++r) {
      const double v = table.at(r, c);
      if (NodeTable::is_missing(v)) continue;
      const std::size_t k =
          col.categorical() ? static_cast<std::size_t>(v) : bin_index(v, col.range().min, col.range().max, kMarginalBins);
      cm.pmf[k] += 1;
      seen += 1;
    }
    if (seen == 0) fail(Errc::kEmptyData, "column '" + col.name + "' has no observed values");
    for (auto& p : cm.pmf) p /= seen;
    m.marginals.push_back(std::move(cm));
  }
  return m;
}

TabularModel fit_empirical(const NodeTable& table) {
  require_rows(table);
  TabularModel m;
  m.kind = TabularKind::kEmpirical;
  m.schema = table.schema();
  m.rows = table;
  return m;
}

std::size_t encoded_width(const FeatureSchema& schema) {
  std::size_t w = 0;
  for (const auto& col : schema.columns()) w += col.categorical() ? col.level_count() : 1;
  return w;
}

Tensor encode_rows(const NodeTable& table) {
  const auto& schema = table.schema();
  const auto blocks = blocks_of(schema);
  Tensor out(table.rows(), encoded_width(schema));
  for (std::size_t r = 0; r < table.rows(); ++r)
    for (std::size_t c = 0; c < schema.size(); ++c) {
      const double v = table.at(r, c);
      if (NodeTable::is_missing(v)) continue;
      if (blocks[c].categorical) {
        out(r, blocks[c].offset + static_cast<std::size_t>(v)) = 1.0;
      } else {
        const auto& range = schema.column(c).range();
        out(r, blocks[c].offset) = range.max > range.min ? (v - range.min) / (range.max - range.min) : 0.0;
      }
    }
  return out;
}

Var record_generator_output(Tape& tape, Var logits, const FeatureSchema& schema, double temperature, Rng& rng) {
  const auto blocks = blocks_of(schema);
  if (tape.cols(logits) != encoded_width(schema)) fail(Errc::kDimensionError, "generator output width mismatch");
  const std::size_t batch = tape.rows(logits);
  std::vector<Var> parts;
  for (const auto& b : blocks) {
    const Var slice = tape.slice_cols(logits, b.offset, b.offset + b.width);
    if (b.categorical) {
      Tensor noise(batch, b.width);
      for (auto& v : noise.data()) v = rng.gumbel();
      const Var perturbed = tape.add(slice, tape.leaf(std::move(noise)));
      parts.push_back(tape.softmax_rows(tape.scale(perturbed, 1.0 / temperature)));
    } else {
      parts.push_back(tape.sigmoid(slice));
    }
  }
  return tape.concat_cols(parts);
}

NodeTable decode_rows(const FeatureSchema& schema, const Tensor& logits, Rng& rng) {
  const auto blocks = blocks_of(schema);
  if (logits.cols() != encoded_width(schema)) fail(Errc::kDimensionError, "generator output width mismatch");
  std::vector<double> values;
  values.reserve(logits.rows() * schema.size());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row(r);
    for (std::size_t c = 0; c < schema.size(); ++c) {
      const auto& b = blocks[c];
      if (b.categorical) {
        std::size_t best = 0;
        double top = -INFINITY;
        for (std::size_t k = 0; k < b.width; ++k) {
          const double s = row[b.offset + k] + rng.gumbel();
          if (s > top) {
            top = s;
            best = k;
          }
        }
        values.push_back(static_cast<double>(best));
      } else {
        const auto& range = schema.column(c).range();
        const double v = range.min + sigmoid(row[b.offset]) * (range.max - range.min);
        values.push_back(std::clamp(v, range.min, range.max));
      }
    }
  }
  return NodeTable(schema, logits.rows(), std::move(values));
}

AdversarialResult fit_adversarial(const NodeTable& table, const AdversarialConfig& config) {
  require_rows(table);
  if (config.latent_dim == 0 || config.batch_size == 0) fail(Errc::kValueError, "latent_dim and batch_size must be >= 1");
  if (!(config.temperature > 0)) fail(Errc::kValueError, "temperature must be positive");
  if (config.pac == 0 || config.pac > config.batch_size) fail(Errc::kValueError, "pac must be in [1, batch_size]");
  if (!(config.ema_decay >= 0 && config.ema_decay < 1)) fail(Errc::kValueError, "ema_decay must be in [0, 1)");
  const auto& schema = table.schema();
  const std::size_t width = encoded_width(schema);
  const Tensor real_all = encode_rows(table);

  AdversarialResult res;
  TabularModel& m = res.model;
  m.kind = TabularKind::kAdversarial;
  m.schema = schema;
  m.latent_dim = config.latent_dim;
  m.temperature = config.temperature;

  std::vector<std::size_t> gdims{config.latent_dim}, ddims{width * config.pac};
  gdims.insert(gdims.end(), config.hidden.begin(), config.hidden.end());
  ddims.insert(ddims.end(), config.hidden.begin(), config.hidden.end());
  gdims.push_back(width);
  ddims.push_back(1);
  std::vector<Activation> acts(config.hidden.size(), Activation::kRelu);
  acts.push_back(Activation::kIdentity);
  m.generator = init_model(Arch::kMlp, gdims, acts, mix_seed(config.seed, 1));
  m.discriminator = init_model(Arch::kMlp, ddims, acts, mix_seed(config.seed, 2));

  AdamConfig adam{config.learning_rate, config.beta1};
  AdamState g_opt(adam, m.generator.params), d_opt(adam, m.discriminator.params);
  Rng rng(mix_seed(config.seed, 3));
  std::vector<std::size_t> order(table.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});

  const double smooth = config.real_label;
  const std::size_t pac = config.pac;
  std::vector<Tensor> average = m.generator.params;
  auto packed = [&](Tape& tape, Var rows) { return tape.reshape(rows, tape.rows(rows) / pac, pac * width); };
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double d_sum = 0, g_sum = 0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t b = std::min(config.batch_size, order.size() - start) / pac * pac;
      if (b == 0) continue;
      Tensor real(b, width);
      for (std::size_t k = 0; k < b; ++k) {
        const auto src = real_all.row(order[start + k]);
        std::copy(src.begin(), src.end(), real.row(k).begin());
      }

      // discriminator step
      {
        Tape tape;
        const auto gp = parameter_leaves(tape, m.generator);
        const auto dp = parameter_leaves(tape, m.discriminator);
        const Var fake_logits = encode(tape, m.generator, gp, nullptr, tape.leaf(gaussian(b, config.latent_dim, rng)));
        const Var fake = record_generator_output(tape, fake_logits, schema, config.temperature, rng);
        const Var d_real = encode(tape, m.discriminator, dp, nullptr, packed(tape, tape.leaf(real)));
        const Var d_fake = encode(tape, m.discriminator, dp, nullptr, packed(tape, fake));
        const Var real_term = tape.add(tape.scale(tape.log_sigmoid(d_real), smooth),
                                       tape.scale(tape.log_sigmoid(tape.scale(d_real, -1.0)), 1.0 - smooth));
        const Var loss = tape.scale(
            tape.add(tape.mean(real_term), tape.mean(tape.log_sigmoid(tape.scale(d_fake, -1.0)))), -1.0);
        tape.forward();
        tape.backward(loss);
        d_opt.step(m.discriminator.params, grads_of(tape, dp));
        d_sum += tape.value(loss).item();
      }
      // generator step, non-saturating loss
      {
        Tape tape;
        const auto gp = parameter_leaves(tape, m.generator);
        const auto dp = parameter_leaves(tape, m.discriminator);
        const Var fake_logits = encode(tape, m.generator, gp, nullptr, tape.leaf(gaussian(b, config.latent_dim, rng)));
        const Var fake = record_generator_output(tape, fake_logits, schema, config.temperature, rng);
        const Var d_fake = encode(tape, m.discriminator, dp, nullptr, packed(tape, fake));
        const Var loss = tape.scale(tape.mean(tape.log_sigmoid(d_fake)), -1.0);
        tape.forward();
        tape.backward(loss);
        g_opt.step(m.generator.params, grads_of(tape, gp));
        for (std::size_t k = 0; k < average.size(); ++k)
          for (std::size_t i = 0; i < average[k].size(); ++i)
            average[k][i] = config.ema_decay * average[k][i] + (1 - config.ema_decay) * m.generator.params[k][i];
        g_sum += tape.value(loss).item();
      }
      ++steps;
    }
    res.discriminator_loss.push_back(steps ? d_sum / static_cast<double>(steps) : NAN);
    res.generator_loss.push_back(steps ? g_sum / static_cast<double>(steps) : NAN);
  }
  if (config.ema_decay > 0) m.generator.params = std::move(average);
  return res;
}

NodeTable sample_population(const TabularModel& model, std::size_t n, std::uint64_t seed) {
  if (n == 0) fail(Errc::kValueError, "population size must be >= 1");
  Rng rng(seed);
  const auto& schema = model.schema;
  switch (model.kind) {
    case TabularKind::kMarginal: {
      if (model.marginals.size() != schema.size()) fail(Errc::kDimensionError, "one marginal per column expected");
      std::vector<double> values(n * schema.size());
      // column by column so each column draws from its own contiguous stream
      for (std::size_t c = 0; c < schema.size(); ++c) {
        const auto& col = schema.column(c);
        const auto& pmf = model.marginals[c].pmf;
        for (std::size_t r = 0; r < n; ++r) {
          const std::size_t k = categorical_draw(pmf, rng);
          double v;
          if (col.categorical()) {
            v = static_cast<double>(k);
          } else {
            const auto& range = col.range();
            const double w = (range.max - range.min) / static_cast<double>(pmf.size());
            v = std::min(range.max, range.min + (static_cast<double>(k) + rng.uniform()) * w);
          }
          values[r * schema.size() + c] = v;
        }
      }
      return NodeTable(schema, n, std::move(values));
    }
    case TabularKind::kEmpirical: {
      std::vector<NodeId> pick(n);
      for (auto& p : pick) p = static_cast<NodeId>(rng.index(model.rows.rows()));
      return model.rows.select(pick);
    }
    case TabularKind::kAdversarial: {
      const Tensor z = gaussian(n, model.latent_dim, rng);
      return decode_rows(schema, mlp_forward(model.generator, z), rng);
    }
  }
  fail(Errc::kValueError, "unknown tabular model kind");
}

std::vector<ColumnComparison> compare_marginals(const NodeTable& real, const NodeTable& synth, std::size_t bins) {
  if (!(real.schema() == synth.schema())) fail(Errc::kSchemaError, "tables have different schemas");
  if (bins == 0) fail(Errc::kValueError, "bins must be >= 1");
  const auto& schema = real.schema();
  std::vector<ColumnComparison> out;
  for (std::size_t c = 0; c < schema.size(); ++c) {
    const auto& col = schema.column(c);
    ColumnComparison cmp;
    cmp.name = col.name;
    if (col.categorical()) {
      cmp.bins = col.levels();
    } else {
      const auto& range = col.range();
      const double w = (range.max - range.min) / static_cast<double>(bins);
      for (std::size_t b = 0; b < bins; ++b) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "[%.6g,%.6g)", range.min + static_cast<double>(b) * w,
                      range.min + static_cast<double>(b + 1) * w);
        cmp.bins.emplace_back(buf);
      }
    }
    auto tally = [&](const NodeTable& t) {
      std::vector<double> h(cmp.bins.size(), 0.0);
      double seen = 0;
      for (std::size_t r = 0; r < t.rows(); ++r) {
        const double v = t.at(r, c);
        if (NodeTable::is_missing(v)) continue;
        h[col.categorical() ? static_cast<std::size_t>(v) : bin_index(v, col.range().min, col.range().max, bins)] += 1;
        seen += 1;
      }
      if (seen > 0)
        for (auto& x : h) x /= seen;
      return h;
    };
    cmp.real = tally(real);
    cmp.synth = tally(synth);
    double tv = 0;
    for (std::size_t b = 0; b < cmp.bins.size(); ++b) tv += std::abs(cmp.real[b] - cmp.synth[b]);
    cmp.total_variation = tv / 2;
    out.push_back(std::move(cmp));
  }
  return out;
}

void write_marginals_csv(std::ostream& out, const std::vector<ColumnComparison>& cmp) {
  out << "column,bin,real,synth\n";
  char buf[128];
  for (const auto& c : cmp)
    for (std::size_t b = 0; b < c.bins.size(); ++b) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g", c.real[b], c.synth[b]);
      out << c.name << ",\"" << c.bins[b] << "\"," << buf << "\n";
    }
}

nlohmann::json tabular_to_json(const TabularModel& model) {
  nlohmann::json j{{"kind", tabular_kind_name(model.kind)}, {"schema", schema_to_json(model.schema)}};
  switch (model.kind) {
    case TabularKind::kMarginal: {
      nlohmann::json cols = nlohmann::json::array();
      for (const auto& m : model.marginals) cols.push_back(m.pmf);
      j["marginals"] = cols;
      break;
    }
    case TabularKind::kEmpirical: {
      nlohmann::json vals = nlohmann::json::array();
      for (double v : model.rows.values()) vals.push_back(NodeTable::is_missing(v) ? nlohmann::json(nullptr) : nlohmann::json(v));
      j["rows"] = model.rows.rows();
      j["values"] = vals;
      break;
    }
    case TabularKind::kAdversarial:
      j["latent_dim"] = model.latent_dim;
      j["temperature"] = model.temperature;
      j["generator"] = model_to_json(model.generator);
      j["discriminator"] = model_to_json(model.discriminator);
      break;
  }
  return j;
}

TabularModel tabular_from_json(const nlohmann::json& j) {
  TabularModel m;
  try {
    m.kind = parse_tabular_kind(j.at("kind").get<std::string>());
    m.schema = schema_from_json(j.at("schema"));
    switch (m.kind) {
      case TabularKind::kMarginal:
        for (const auto& pmf : j.at("marginals")) m.marginals.push_back({pmf.get<std::vector<double>>()});
        if (m.marginals.size() != m.schema.size()) fail(Errc::kDimensionError, "one marginal per column expected");
        for (std::size_t c = 0; c < m.schema.size(); ++c) {
          const auto& col = m.schema.column(c);
          const std::size_t want = col.categorical() ? col.level_count() : m.marginals[c].pmf.size();
          if (m.marginals[c].pmf.size() != want || want == 0)
            fail(Errc::kDimensionError, "marginal of column '" + col.name + "' has the wrong length");
        }
        break;
      case TabularKind::kEmpirical: {
        std::vector<double> vals;
        for (const auto& v : j.at("values")) vals.push_back(v.is_null() ? NAN : v.get<double>());
        m.rows = NodeTable(m.schema, j.at("rows").get<std::size_t>(), std::move(vals), true);
        break;
      }
      case TabularKind::kAdversarial:
        m.latent_dim = j.at("latent_dim").get<std::size_t>();
        m.temperature = j.at("temperature").get<double>();
        m.generator = model_from_json(j.at("generator"));
        m.discriminator = model_from_json(j.at("discriminator"));
        if (m.generator.input_dim() != m.latent_dim || m.generator.output_dim() != encoded_width(m.schema))
          fail(Errc::kDimensionError, "generator does not match the schema");
        break;
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::kParseError, std::string("bad tabular model json: ") + e.what());
  }
  return m;
}

}  // namespace socgen

#include "socgen/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "socgen/error.hpp"

namespace socgen {

namespace {

template <class E>
E parse_enum(const std::string& name, std::initializer_list<std::pair<const char*, E>> table, const char* what) {
  for (const auto& [text, value] : table)
    if (name == text) return value;
  fail(Errc::kValueError, std::string("unknown ") + what + " '" + name + "'");
}

}  // namespace

std::string arch_name(Arch arch) {
  switch (arch) {
    case Arch::kMlp: return "mlp";
    case Arch::kGcn: return "gcn";
    case Arch::kSage: return "sage";
  }
  return "?";
}

Arch parse_arch(const std::string& name) {
  return parse_enum<Arch>(name, {{"mlp", Arch::kMlp}, {"gcn", Arch::kGcn}, {"sage", Arch::kSage}}, "architecture");
}

std::string activation_name(Activation act) {
  switch (act) {
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kTanh: return "tanh";
    case Activation::kRelu: return "relu";
    case Activation::kIdentity: return "identity";
  }
  return "?";
}

Activation parse_activation(const std::string& name) {
  return parse_enum<Activation>(name,
                                {{"sigmoid", Activation::kSigmoid},
                                 {"tanh", Activation::kTanh},
                                 {"relu", Activation::kRelu},
                                 {"identity", Activation::kIdentity}},
                                "activation");
}

std::string aggregation_name(Aggregation agg) { return agg == Aggregation::kSum ? "sum" : "mean"; }

Aggregation parse_aggregation(const std::string& name) {
  return parse_enum<Aggregation>(name, {{"sum", Aggregation::kSum}, {"mean", Aggregation::kMean}}, "aggregation");
}

std::size_t GnnModel::parameter_count() const {
  std::size_t total = 0;
  for (const auto& p : params) total += p.size();
  return total;
}

void GnnModel::validate() const {
  if (dims.size() < 2) fail(Errc::kDimensionError, "a model needs at least input and output dims");
  if (activations.size() != num_layers())
    fail(Errc::kDimensionError, "expected " + std::to_string(num_layers()) + " activations");
  if (params.size() != num_layers() * tensors_per_layer())
    fail(Errc::kDimensionError, "parameter tensor count does not match the architecture");
  for (std::size_t l = 0; l < num_layers(); ++l) {
    auto check = [&](const Tensor& t, std::size_t r, std::size_t c) {
      if (t.rows() != r || t.cols() != c)
        fail(Errc::kDimensionError, "layer " + std::to_string(l) + " parameter has the wrong shape");
    };
    check(weight(l), dims[l], dims[l + 1]);
    if (arch == Arch::kSage) check(neighbor_weight(l), dims[l], dims[l + 1]);
    check(bias(l), 1, dims[l + 1]);
  }
}

GnnModel init_model(Arch arch, std::vector<std::size_t> dims, std::vector<Activation> activations, std::uint64_t seed,
                    Aggregation aggregation) {
  if (dims.size() < 2) fail(Errc::kDimensionError, "dims must have length >= 2");
  if (std::find(dims.begin(), dims.end(), 0u) != dims.end()) fail(Errc::kDimensionError, "zero layer width");
  GnnModel model{arch, std::move(dims), std::move(activations), aggregation, {}};
  if (model.activations.size() != model.num_layers())
    fail(Errc::kDimensionError, "expected " + std::to_string(model.num_layers()) + " activations");
  Rng rng(seed);
  auto glorot = [&](std::size_t fan_in, std::size_t fan_out) {
    Tensor w(fan_in, fan_out);
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& v : w.data()) v = rng.uniform(-a, a);
    return w;
  };
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    const auto fi = model.dims[l], fo = model.dims[l + 1];
    model.params.push_back(glorot(fi, fo));
    if (arch == Arch::kSage) model.params.push_back(glorot(fi, fo));
    model.params.emplace_back(1, fo);
  }
  return model;
}

// ---------------------------------------------------------------------------

double Propagation::coefficient(NodeId i, NodeId j) const {
  if (i == j) return self_weight.at(i);
  for (std::size_t p = offsets.at(i); p < offsets.at(i + 1); ++p)
    if (neighbor[p] == j) return weight[p];
  return 0.0;
}

Propagation normalized_adjacency(const AttributedGraph& graph) {
  const std::size_t n = graph.num_nodes();
  auto dt = [&](NodeId v) { return static_cast<double>(graph.degree(v) + 1); };
  Propagation prop;
  prop.offsets.reserve(n + 1);
  prop.offsets.push_back(0);
  prop.neighbor.reserve(2 * graph.num_edges());
  prop.weight.reserve(2 * graph.num_edges());
  prop.self_weight.resize(n);
  for (NodeId i = 0; i < n; ++i) {
    prop.self_weight[i] = 1.0 / dt(i);
    for (NodeId j : graph.neighbors(i)) {
      prop.neighbor.push_back(j);
      prop.weight.push_back(1.0 / std::sqrt(dt(i) * dt(j)));
    }
    prop.offsets.push_back(prop.neighbor.size());
  }
  return prop;
}

Propagation neighbor_aggregation(const AttributedGraph& graph, Aggregation agg) {
  const std::size_t n = graph.num_nodes();
  Propagation prop;
  prop.offsets.reserve(n + 1);
  prop.offsets.push_back(0);
  prop.self_weight.assign(n, 0.0);
  for (NodeId i = 0; i < n; ++i) {
    const auto nbrs = graph.neighbors(i);
    const double w = agg == Aggregation::kSum || nbrs.empty() ? 1.0 : 1.0 / static_cast<double>(nbrs.size());
    for (NodeId j : nbrs) {
      prop.neighbor.push_back(j);
      prop.weight.push_back(w);
    }
    prop.offsets.push_back(prop.neighbor.size());
  }
  return prop;
}

std::optional<Propagation> propagation_for(const GnnModel& model, const AttributedGraph& graph) {
  switch (model.arch) {
    case Arch::kMlp: return std::nullopt;
    case Arch::kGcn: return normalized_adjacency(graph);
    case Arch::kSage: return neighbor_aggregation(graph, model.aggregation);
  }
  return std::nullopt;
}

std::vector<Var> parameter_leaves(Tape& tape, const GnnModel& model) {
  std::vector<Var> out;
  out.reserve(model.params.size());
  for (const auto& p : model.params) out.push_back(tape.leaf(p));
  return out;
}

Var encode(Tape& tape, const GnnModel& model, std::span<const Var> params, const Propagation* prop, Var x) {
  model.validate();
  if (params.size() != model.params.size()) fail(Errc::kDimensionError, "parameter leaf count mismatch");
  if (tape.cols(x) != model.input_dim())
    fail(Errc::kDimensionError, "input has " + std::to_string(tape.cols(x)) + " columns, model expects " +
                                    std::to_string(model.input_dim()));
  if (model.arch != Arch::kMlp) {
    if (prop == nullptr) fail(Errc::kValueError, arch_name(model.arch) + " needs a graph");
    if (prop->num_nodes() != tape.rows(x))
      fail(Errc::kDimensionError, "feature rows do not match the graph's node count");
  }
  auto propagate = [&](Var z) {
    return tape.aggregate(z, prop->offsets, prop->neighbor, prop->weight, prop->self_weight);
  };
  const std::size_t per = model.tensors_per_layer();
  Var z = x;
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    const Var w = params[l * per];
    const Var b = params[l * per + per - 1];
    // propagate on whichever side of the matmul is narrower
    const bool narrow_out = model.dims[l + 1] <= model.dims[l];
    Var h;
    switch (model.arch) {
      case Arch::kMlp:
        h = tape.matmul(z, w);
        break;
      case Arch::kGcn:
        h = narrow_out ? propagate(tape.matmul(z, w)) : tape.matmul(propagate(z), w);
        break;
      case Arch::kSage: {
        const Var w2 = params[l * per + 1];
        const Var nbr = narrow_out ? propagate(tape.matmul(z, w2)) : tape.matmul(propagate(z), w2);
        h = tape.add(tape.matmul(z, w), nbr);
        break;
      }
    }
    h = tape.add_row(h, b);
    switch (model.activations[l]) {
      case Activation::kSigmoid: h = tape.sigmoid(h); break;
      case Activation::kTanh: h = tape.tanh(h); break;
      case Activation::kRelu: h = tape.relu(h); break;
      case Activation::kIdentity: break;
    }
    z = h;
  }
  return z;
}

namespace {

Tensor run(const GnnModel& model, const Propagation* prop, const Tensor& x) {
  Tape tape;
  const auto params = parameter_leaves(tape, model);
  const Var in = tape.leaf(x);
  const Var out = encode(tape, model, params, prop, in);
  tape.forward();
  return tape.value(out);
}

void expect_arch(const GnnModel& model, Arch arch) {
  if (model.arch != arch) fail(Errc::kValueError, "model is " + arch_name(model.arch) + ", not " + arch_name(arch));
}

}  // namespace

Tensor mlp_forward(const GnnModel& model, const Tensor& x) {
  expect_arch(model, Arch::kMlp);
  return run(model, nullptr, x);
}

Tensor gcn_forward(const GnnModel& model, const AttributedGraph& graph, const Tensor& v) {
  expect_arch(model, Arch::kGcn);
  const auto prop = normalized_adjacency(graph);
  return run(model, &prop, v);
}

Tensor sage_forward(const GnnModel& model, const AttributedGraph& graph, const Tensor& v) {
  expect_arch(model, Arch::kSage);
  const auto prop = neighbor_aggregation(graph, model.aggregation);
  return run(model, &prop, v);
}

Tensor forward(const GnnModel& model, const AttributedGraph& graph, const Tensor& v) {
  const auto prop = propagation_for(model, graph);
  return run(model, prop ? &*prop : nullptr, v);
}

// ---------------------------------------------------------------------------

nlohmann::json tensor_to_json(const Tensor& t) {
  return {{"rows", t.rows()}, {"cols", t.cols()}, {"values", t.data()}};
}

Tensor tensor_from_json(const nlohmann::json& j) {
  try {
    return Tensor(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                  j.at("values").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::kParseError, std::string("bad tensor: ") + e.what());
  }
}

nlohmann::json model_to_json(const GnnModel& model) {
  nlohmann::json j;
  j["arch"] = arch_name(model.arch);
  j["dims"] = model.dims;
  std::vector<std::string> acts;
  for (auto a : model.activations) acts.push_back(activation_name(a));
  j["activations"] = acts;
  j["aggregation"] = aggregation_name(model.aggregation);
  auto& params = j["params"] = nlohmann::json::array();
  for (const auto& p : model.params) params.push_back(tensor_to_json(p));
  return j;
}

GnnModel model_from_json(const nlohmann::json& j) {
  GnnModel model;
  try {
    model.arch = parse_arch(j.at("arch").get<std::string>());
    model.dims = j.at("dims").get<std::vector<std::size_t>>();
    for (const auto& a : j.at("activations")) model.activations.push_back(parse_activation(a.get<std::string>()));
    model.aggregation = parse_aggregation(j.value("aggregation", std::string("mean")));
    for (const auto& p : j.at("params")) model.params.push_back(tensor_from_json(p));
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::kParseError, std::string("bad model json: ") + e.what());
  }
  model.validate();
  return model;
}

// ---------------------------------------------------------------------------

std::size_t FeatureEncoder::width() const {
  std::size_t w = 0;
  for (auto c : columns) {
    const auto& col = schema.column(c);
    w += col.categorical() ? col.level_count() : 1;
  }
  return w;
}

Tensor FeatureEncoder::encode(const NodeTable& table) const {
  if (!(table.schema() == schema)) fail(Errc::kSchemaError, "node table schema differs from the encoder's");
  Tensor out(table.rows(), width());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < columns.size(); ++k) {
      const auto& col = schema.column(columns[k]);
      const double v = table.at(r, columns[k]);
      if (col.categorical()) {
        if (!NodeTable::is_missing(v)) out(r, offset + static_cast<std::size_t>(v)) = 1.0;
        offset += col.level_count();
      } else {
        const double span = hi[k] - lo[k];
        if (!NodeTable::is_missing(v)) out(r, offset) = span > 0 ? (v - lo[k]) / span : 0.0;
        offset += 1;
      }
    }
  }
  return out;
}

FeatureEncoder FeatureEncoder::fit(const NodeTable& table, std::span<const NodeId> rows,
                                   const std::optional<std::string>& exclude) {
  FeatureEncoder enc;
  enc.schema = table.schema();
  std::optional<std::size_t> skip;
  if (exclude) skip = enc.schema.require(*exclude);
  std::vector<NodeId> all;
  if (rows.empty()) {
    all.resize(table.rows());
    for (NodeId i = 0; i < all.size(); ++i) all[i] = i;
    rows = all;
  }
  for (std::size_t c = 0; c < enc.schema.size(); ++c) {
    if (skip && *skip == c) continue;
    enc.columns.push_back(c);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    if (!enc.schema.column(c).categorical()) {
      for (NodeId r : rows) {
        const double v = table.at(r, c);
        if (NodeTable::is_missing(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (lo > hi) lo = hi = 0.0;  // no observed values
    } else {
      lo = hi = 0.0;
    }
    enc.lo.push_back(lo);
    enc.hi.push_back(hi);
  }
  return enc;
}

nlohmann::json schema_to_json(const FeatureSchema& schema) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : schema.columns()) {
    if (c.categorical())
      cols.push_back({{"name", c.name}, {"kind", "categorical"}, {"levels", c.levels()}});
    else
      cols.push_back({{"name", c.name}, {"kind", "continuous"}, {"min", c.range().min}, {"max", c.range().max}});
  }
  return {{"columns", cols}};
}

FeatureSchema schema_from_json(const nlohmann::json& j) {
  std::vector<Column> cols;
  try {
    for (const auto& c : j.at("columns")) {
      const auto name = c.at("name").get<std::string>();
      const auto kind = c.at("kind").get<std::string>();
      if (kind == "categorical")
        cols.push_back(categorical_column(name, c.at("levels").get<std::vector<std::string>>()));
      else if (kind == "continuous")
        cols.push_back(continuous_column(name, c.at("min").get<double>(), c.at("max").get<double>()));
      else
        fail(Errc::kSchemaError, "column '" + name + "' has unknown kind '" + kind + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::kSchemaError, std::string("bad schema json: ") + e.what());
  }
  return FeatureSchema(std::move(cols));
}

nlohmann::json encoder_to_json(const FeatureEncoder& enc) {
  return {{"schema", schema_to_json(enc.schema)}, {"columns", enc.columns}, {"lo", enc.lo}, {"hi", enc.hi}};
}

FeatureEncoder encoder_from_json(const nlohmann::json& j) {
  FeatureEncoder enc;
  enc.schema = schema_from_json(j.at("schema"));
  try {
    enc.columns = j.at("columns").get<std::vector<std::size_t>>();
    enc.lo = j.at("lo").get<std::vector<double>>();
    enc.hi = j.at("hi").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::kParseError, std::string("bad encoder json: ") + e.what());
  }
  if (enc.lo.size() != enc.columns.size() || enc.hi.size() != enc.columns.size())
    fail(Errc::kParseError, "encoder bounds do not match its columns");
  for (auto c : enc.columns)
    if (c >= enc.schema.size()) fail(Errc::kParseError, "encoder column out of range");
  return enc;
}

}  // namespace socgen

#include "socgen/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>

#include "socgen/ergm.hpp"
#include "socgen/error.hpp"
#include "socgen/generator.hpp"
#include "socgen/io.hpp"
#include "socgen/netstats.hpp"
#include "socgen/rng.hpp"
#include "socgen/sampling.hpp"
#include "socgen/tabgen.hpp"
#include "socgen/tasks.hpp"

namespace socgen {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"ingest",        "stats",     "compare",        "sample",
                                              "train-nodeclass", "impute",  "train-linkpred", "gen-attrs",
                                              "generate",      "ergm-fit", "ergm-sim",       "ergm-gof"};
  return names;
}

std::uint64_t command_seed(std::uint64_t seed, const std::string& command) { return mix_seed(seed, fnv1a(command)); }

WorkspaceConfig WorkspaceConfig::load(const fs::path& file) {
  return from_json(read_json_file(file), fs::absolute(file).parent_path());
}

WorkspaceConfig WorkspaceConfig::from_json(const json& j, const fs::path& base) {
  if (!j.is_object()) fail(Errc::kParseError, "config must be a JSON object");
  WorkspaceConfig ws;
  ws.base = base;
  ws.root = j;
  const auto& names = command_names();
  for (const auto& [key, value] : j.items()) {
    if (key == "seed") {
      if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<std::int64_t>() >= 0))
        fail(Errc::kParseError, "config seed must be a non-negative integer");
      ws.seed = value.get<std::uint64_t>();
    } else if (key == "out") {
      if (!value.is_string()) fail(Errc::kParseError, "config out must be a path");
      ws.out = ws.resolve(value.get<std::string>());
    } else if (std::find(names.begin(), names.end(), key) == names.end()) {
      fail(Errc::kParseError, "unknown config key '" + key + "'");
    } else if (!value.is_object()) {
      fail(Errc::kParseError, "config block '" + key + "' must be an object");
    }
  }
  if (!j.contains("out")) ws.out = ws.resolve("out");
  return ws;
}

json WorkspaceConfig::block(const std::string& command) const {
  return root.contains(command) ? root.at(command) : json::object();
}

fs::path WorkspaceConfig::resolve(const std::string& path) const {
  const fs::path p(path);
  return p.is_absolute() ? p : base / p;
}

fs::path WorkspaceConfig::default_out(const std::string& command) const { return out / command; }

namespace {

/// Typed access to one command block; remembers which keys were read so that
/// misspelled keys are reported instead of silently ignored.
class Params {
 public:
  Params(json block, std::string command, const WorkspaceConfig& ws)
      : block_(std::move(block)), command_(std::move(command)), ws_(ws) {}

  bool has(const std::string& key) {
    used_.insert(key);
    return block_.contains(key);
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return convert<T>(key);
  }

  template <class T>
  T require(const std::string& key) {
    if (!has(key)) fail(Errc::kParseError, command_ + ": missing parameter '" + key + "'");
    return convert<T>(key);
  }

  fs::path path(const std::string& key) { return ws_.resolve(require<std::string>(key)); }

  json raw(const std::string& key) {
    used_.insert(key);
    return block_.value(key, json());
  }

  void finish() const {
    for (const auto& [key, value] : block_.items())
      if (!used_.count(key)) fail(Errc::kParseError, command_ + ": unknown parameter '" + key + "'");
  }

 private:
  template <class T>
  T convert(const std::string& key) {
    try {
      return block_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(Errc::kParseError, command_ + ": parameter '" + key + "' has the wrong type");
    }
  }

  json block_;
  std::string command_;
  const WorkspaceConfig& ws_;
  std::set<std::string> used_;
};

/// Artifacts written by a command, checked before the summary is returned.
class Artifacts {
 public:
  explicit Artifacts(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  const fs::path& dir() const { return dir_; }

  std::ofstream open(const std::string& name) {
    files_.push_back(name);
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) fail(Errc::kIoError, "cannot write " + (dir_ / name).string());
    return out;
  }

  void json_file(const std::string& name, const json& j) {
    files_.push_back(name);
    write_json_file(dir_ / name, j);
  }

  void bundle(const AttributedGraph& g, std::span<const std::string> ids, bool allow_missing = false) {
    write_bundle(dir_, g, ids);
    for (const char* f : {"nodes.csv", "edges.csv", "schema.json"}) files_.push_back(f);
    bundles_.push_back({g.num_nodes(), g.num_edges(), allow_missing});
  }

  json finish() const {
    for (const auto& f : files_) {
      const fs::path p = dir_ / f;
      if (!fs::exists(p) || fs::file_size(p) == 0) fail(Errc::kIoError, "artifact " + p.string() + " was not written");
      if (p.extension() == ".json") read_json_file(p);
    }
    for (const auto& b : bundles_) {
      const Bundle back = read_bundle(dir_, b.allow_missing);
      if (back.graph.num_nodes() != b.nodes || back.graph.num_edges() != b.edges)
        fail(Errc::kIoError, "bundle in " + dir_.string() + " does not read back");
    }
    std::vector<std::string> names(files_.begin(), files_.end());
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    return names;
  }

 private:
  struct BundleCheck {
    std::size_t nodes, edges;
    bool allow_missing;
  };
  fs::path dir_;
  std::vector<std::string> files_;
  std::vector<BundleCheck> bundles_;
};

void csv_row(std::ostream& out, std::initializer_list<std::string> fields) {
  const std::vector<std::string> v(fields);
  write_csv_row(out, v);
}

std::string num(double v) { return format_number(v); }

json number_or_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

std::vector<std::string> string_list(Params& p, const std::string& key) {
  return p.get<std::vector<std::string>>(key, {});
}

json stats_json(const StatsReport& r) {
  json degrees = json::array();
  for (const auto& [k, c] : r.degrees.counts) degrees.push_back({k, c});
  json knn = json::array();
  for (const auto& [k, v] : r.knn) knn.push_back({k, v});
  json mixing = json::array();
  for (const auto& m : r.mixing) {
    json rows = json::array();
    for (std::size_t a = 0; a < m.size(); ++a) {
      json row = json::array();
      for (std::size_t b = 0; b < m.size(); ++b) row.push_back(m.at(a, b));
      rows.push_back(row);
    }
    mixing.push_back({{"attribute", m.attribute}, {"labels", m.labels}, {"entries", rows}});
  }
  return {{"num_nodes", r.num_nodes},
          {"num_edges", r.num_edges},
          {"giant_component", r.giant_component},
          {"num_components", r.num_components},
          {"isolates", r.isolates},
          {"triangles", r.triangles},
          {"mean_degree", r.mean_degree},
          {"median_degree", r.median_degree},
          {"degree_counts", degrees},
          {"knn", knn},
          {"mixing", mixing}};
}

void write_mixing_csv(std::ostream& out, const std::vector<std::string>& labels,
                      const std::function<double(std::size_t, std::size_t)>& value) {
  csv_row(out, {"level_a", "level_b", "value"});
  for (std::size_t a = 0; a < labels.size(); ++a)
    for (std::size_t b = a; b < labels.size(); ++b) csv_row(out, {labels[a], labels[b], num(value(a, b))});
}

void write_roc_csv(std::ostream& out, const EvalReport& r) {
  csv_row(out, {"fpr", "tpr"});
  for (const auto& [f, t] : r.roc) csv_row(out, {num(f), num(t)});
}

void write_curve_csv(std::ostream& out, const std::vector<EpochRecord>& curve) {
  csv_row(out, {"epoch", "loss", "train_accuracy", "test_accuracy", "auc", "average_precision"});
  for (const auto& e : curve)
    csv_row(out, {std::to_string(e.epoch), num(e.loss), num(e.train_accuracy), num(e.test_accuracy), num(e.auc),
                  num(e.average_precision)});
}

Tensor matrix_param(const json& j, const std::string& what) {
  try {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    if (rows.empty()) fail(Errc::kParseError, what + " is empty");
    Tensor t(rows.size(), rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != t.cols()) fail(Errc::kParseError, what + " rows differ in length");
      for (std::size_t c = 0; c < t.cols(); ++c) t(r, c) = rows[r][c];
    }
    return t;
  } catch (const json::exception&) {
    fail(Errc::kParseError, what + " must be a matrix of numbers");
  }
}

ErgmFit load_fit(const fs::path& path) { return ergm_fit_from_json(read_json_file(path)); }

McmcConfig mcmc_params(Params& p, std::uint64_t seed) {
  McmcConfig c;
  c.proposal = parse_proposal(p.get<std::string>("proposal", proposal_name(c.proposal)));
  c.steps = p.get<std::size_t>("steps", c.steps);
  c.burn_in = p.get<std::size_t>("burn_in", c.burn_in);
  c.thinning = p.get<std::size_t>("thinning", c.thinning);
  c.seed = seed;
  return c;
}

using Command = std::function<json(Params&, Artifacts&, std::uint64_t)>;

json cmd_ingest(Params& p, Artifacts& out, std::uint64_t) {
  const bool allow_missing = p.get<bool>("allow_missing", false);
  const Bundle b = ingest(p.path("nodes"), p.path("edges"), p.path("schema"), allow_missing);
  p.finish();
  out.bundle(b.graph, b.ids, allow_missing);
  return {{"nodes", b.graph.num_nodes()},
          {"edges", b.graph.num_edges()},
          {"duplicate_edges", b.duplicate_edges},
          {"self_loops", b.self_loops}};
}

json cmd_stats(Params& p, Artifacts& out, std::uint64_t) {
  const Bundle b = read_bundle(p.path("graph"));
  const auto attrs = string_list(p, "attributes");
  p.finish();
  const StatsReport r = stats_report(b.graph, attrs);
  out.json_file("stats.json", stats_json(r));
  {
    auto f = out.open("degree.csv");
    csv_row(f, {"degree", "count", "pmf", "ccdf"});
    for (std::size_t k = 0; k <= r.degrees.max_degree(); ++k)
      csv_row(f, {std::to_string(k), std::to_string(r.degrees.count(k)), num(r.degrees.pmf(k)),
                  num(r.degrees.ccdf(k))});
  }
  {
    auto f = out.open("knn.csv");
    csv_row(f, {"degree", "knn"});
    for (const auto& [k, v] : r.knn) csv_row(f, {std::to_string(k), num(v)});
  }
  for (const auto& m : r.mixing) {
    auto f = out.open("mixing_" + m.attribute + ".csv");
    write_mixing_csv(f, m.labels, [&](std::size_t a, std::size_t b) { return m.at(a, b); });
  }
  return {{"nodes", r.num_nodes},
          {"edges", r.num_edges},
          {"triangles", r.triangles},
          {"components", r.num_components},
          {"giant_component", r.giant_component}};
}

json cmd_compare(Params& p, Artifacts& out, std::uint64_t) {
  const Bundle first = read_bundle(p.path("first"));
  const Bundle second = read_bundle(p.path("second"));
  const auto attrs = string_list(p, "attributes");
  p.finish();
  const StatsComparison c = compare_stats(first.graph, second.graph, attrs);
  json deltas = c.deltas;
  out.json_file("compare.json", {{"deltas", deltas}, {"first", stats_json(c.first)}, {"second", stats_json(c.second)}});
  {
    auto f = out.open("degree_histogram.csv");
    csv_row(f, {"degree", "first", "second"});
    for (const auto& row : c.degree_histogram)
      csv_row(f, {std::to_string(row.k), std::to_string(row.first), std::to_string(row.second)});
  }
  for (std::size_t a = 0; a < c.mixing_deltas.size(); ++a) {
    const auto& m = c.first.mixing[a];
    const auto& d = c.mixing_deltas[a];
    auto f = out.open("mixing_delta_" + m.attribute + ".csv");
    write_mixing_csv(f, m.labels, [&](std::size_t i, std::size_t j) { return d[i * m.size() + j]; });
  }
  return {{"deltas", deltas}};
}

json cmd_sample(Params& p, Artifacts& out, std::uint64_t seed) {
  const Bundle b = read_bundle(p.path("graph"));
  const SampleKind kind = parse_sample_kind(p.get<std::string>("kind", "snowball"));
  const auto num_seeds = p.get<std::size_t>("seeds", 5);
  const auto waves = p.get<std::size_t>("waves", 2);
  const auto num_roots = p.get<std::size_t>("num_roots", 100);
  const auto walk_length = p.get<std::size_t>("walk_length", 3);
  p.finish();
  const std::size_t n = b.graph.num_nodes();
  if (n == 0) fail(Errc::kEmptyGraph, "sample: graph has no nodes");
  Rng rng(seed);
  const auto seeds = sample_distinct(n, std::min(num_seeds, n), rng);
  SubgraphSample s;
  switch (kind) {
    case SampleKind::kStar:
      s = star_sample(b.graph, seeds);
      break;
    case SampleKind::kNeighborhood:
      s = neighborhood_sample(b.graph, seeds);
      break;
    case SampleKind::kSnowball:
      s = snowball_sample(b.graph, seeds, waves);
      break;
    case SampleKind::kRandomWalk:
      s = random_walk_batch(b.graph, num_roots, walk_length, rng);
      break;
  }
  const Subgraph sub = materialize(b.graph, s);
  std::vector<std::string> ids;
  for (NodeId v : sub.original_ids) ids.push_back(b.ids[v]);
  out.bundle(sub.graph, ids);
  json seed_ids = json::array();
  for (NodeId v : s.seeds) seed_ids.push_back(b.ids[v]);
  out.json_file("sample.json", {{"kind", sample_kind_name(kind)}, {"seeds", seed_ids}, {"wave_sizes", s.wave_sizes}});
  return {{"kind", sample_kind_name(kind)}, {"nodes", sub.graph.num_nodes()}, {"edges", sub.graph.num_edges()}};
}

json cmd_train_nodeclass(Params& p, Artifacts& out, std::uint64_t seed) {
  const Bundle b = read_bundle(p.path("graph"), true);
  const auto target = p.require<std::string>("target");
  const Arch arch = parse_arch(p.get<std::string>("arch", "sage"));
  ClassifierConfig c;
  c.hidden = p.get<std::vector<std::size_t>>("hidden", {64});
  c.activation = parse_activation(p.get<std::string>("activation", activation_name(c.activation)));
  c.aggregation = parse_aggregation(p.get<std::string>("aggregation", aggregation_name(c.aggregation)));
  c.epochs = p.get<std::size_t>("epochs", c.epochs);
  c.learning_rate = p.get<double>("learning_rate", 1e-2);
  c.train_frac = p.get<double>("train_frac", c.train_frac);
  c.num_roots = p.get<std::size_t>("num_roots", c.num_roots);
  c.walk_length = p.get<std::size_t>("walk_length", c.walk_length);
  c.batch_size = p.get<std::size_t>("batch_size", c.batch_size);
  c.batches_per_epoch = p.get<std::size_t>("batches_per_epoch", c.batches_per_epoch);
  c.seed = seed;
  p.finish();
  const ClassifierResult r = train_classifier(b.graph, target, arch, c);
  out.json_file("classifier.json", classifier_to_json(r.model));
  {
    auto f = out.open("curve.csv");
    write_curve_csv(f, r.curve);
  }
  json report = report_to_json(r.test);
  const auto frac = r.split.fractions();
  report["edge_classes"] = {{"train_train", frac[0]}, {"train_test", frac[1]}, {"test_test", frac[2]}};
  out.json_file("report.json", report);
  if (!r.test.roc.empty()) {
    auto f = out.open("roc.csv");
    write_roc_csv(f, r.test);
  }
  return {{"arch", arch_name(arch)},
          {"test_accuracy", number_or_null(r.test.accuracy)},
          {"test_auc", number_or_null(r.test.auc)}};
}

json cmd_impute(Params& p, Artifacts& out, std::uint64_t) {
  const Bundle b = read_bundle(p.path("graph"), true);
  const ClassifierModel model = classifier_from_json(read_json_file(p.path("model")));
  p.finish();
  const auto labels = node_labels(b.graph.nodes(), model.target);
  std::vector<NodeId> missing;
  for (NodeId v = 0; v < labels.size(); ++v)
    if (!labels[v]) missing.push_back(v);
  const NodeTable filled = impute_node_attribute(model, b.graph, missing);
  const AttributedGraph g(filled, EdgeList(b.graph.edges()));
  out.bundle(g, b.ids, true);
  const std::size_t col = filled.schema().require(model.target);
  {
    auto f = out.open("imputed.csv");
    csv_row(f, {"id", model.target});
    for (NodeId v : missing) csv_row(f, {b.ids[v], format_cell(filled.schema().column(col), filled.at(v, col))});
  }
  return {{"target", model.target}, {"imputed", missing.size()}};
}

json cmd_train_linkpred(Params& p, Artifacts& out, std::uint64_t seed) {
  const Bundle b = read_bundle(p.path("graph"));
  const Arch arch = parse_arch(p.get<std::string>("arch", "sage"));
  GaeConfig c;
  c.hidden = p.get<std::vector<std::size_t>>("hidden", {64});
  c.embedding_dim = p.get<std::size_t>("embedding_dim", 16);
  c.activation = parse_activation(p.get<std::string>("activation", activation_name(c.activation)));
  c.aggregation = parse_aggregation(p.get<std::string>("aggregation", aggregation_name(c.aggregation)));
  c.epochs = p.get<std::size_t>("epochs", 100);
  c.learning_rate = p.get<double>("learning_rate", 1e-2);
  c.train_frac = p.get<double>("train_frac", c.train_frac);
  c.negatives_per_positive = p.get<std::size_t>("negatives_per_positive", c.negatives_per_positive);
  c.num_roots = p.get<std::size_t>("num_roots", c.num_roots);
  c.walk_length = p.get<std::size_t>("walk_length", c.walk_length);
  c.batches_per_epoch = p.get<std::size_t>("batches_per_epoch", c.batches_per_epoch);
  c.eval_every = p.get<std::size_t>("eval_every", 10);
  c.lambda = p.get<double>("lambda", 0.0);
  c.mixing_attribute = p.get<std::string>("mixing_attribute", "");
  if (p.has("target_mixing")) c.target_mixing = matrix_param(p.raw("target_mixing"), "target_mixing");
  c.seed = seed;
  p.finish();
  const GaeResult r = train_gae(b.graph, arch, c);
  out.json_file("gae.json", gae_to_json(r.model));
  {
    auto f = out.open("curve.csv");
    write_curve_csv(f, r.curve);
  }
  out.json_file("report.json", report_to_json(r.test));
  {
    auto f = out.open("roc.csv");
    write_roc_csv(f, r.test);
  }
  return {{"arch", arch_name(arch)},
          {"test_auc", number_or_null(r.test.auc)},
          {"test_average_precision", number_or_null(r.test.average_precision)}};
}

json cmd_gen_attrs(Params& p, Artifacts& out, std::uint64_t seed) {
  const Bundle b = read_bundle(p.path("table"));
  const TabularKind kind = parse_tabular_kind(p.get<std::string>("kind", "marginal"));
  const auto n = p.get<std::size_t>("n", b.graph.num_nodes());
  AdversarialConfig ac;
  ac.latent_dim = p.get<std::size_t>("latent_dim", ac.latent_dim);
  ac.hidden = p.get<std::vector<std::size_t>>("hidden", ac.hidden);
  ac.epochs = p.get<std::size_t>("epochs", ac.epochs);
  ac.batch_size = p.get<std::size_t>("batch_size", ac.batch_size);
  ac.learning_rate = p.get<double>("learning_rate", ac.learning_rate);
  ac.pac = p.get<std::size_t>("pac", ac.pac);
  ac.seed = mix_seed(seed, 1);
  const auto bins = p.get<std::size_t>("bins", kMarginalBins / 4);
  p.finish();

  const NodeTable& table = b.graph.nodes();
  TabularModel model;
  switch (kind) {
    case TabularKind::kMarginal:
      model = fit_marginal(table);
      break;
    case TabularKind::kEmpirical:
      model = fit_empirical(table);
      break;
    case TabularKind::kAdversarial:
      model = fit_adversarial(table, ac).model;
      break;
  }
  const NodeTable synth = sample_population(model, n, mix_seed(seed, 2));
  out.json_file("tabular.json", tabular_to_json(model));
  out.bundle(AttributedGraph(synth, EdgeList{}), {});
  const auto cmp = compare_marginals(table, synth, bins);
  {
    auto f = out.open("marginals.csv");
    write_marginals_csv(f, cmp);
  }
  json tv = json::object();
  double worst = 0;
  for (const auto& c : cmp) {
    tv[c.name] = c.total_variation;
    worst = std::max(worst, c.total_variation);
  }
  out.json_file("marginals.json", {{"total_variation", tv}});
  return {{"kind", tabular_kind_name(kind)}, {"rows", n}, {"max_total_variation", worst}};
}

json cmd_generate(Params& p, Artifacts& out, std::uint64_t seed) {
  const Bundle nodes = read_bundle(p.path("nodes"));
  const GaeModel gae = gae_from_json(read_json_file(p.path("model")));
  ChainConfig c;
  if (p.has("target_edges")) {
    c.target_edges = p.require<std::size_t>("target_edges");
  } else {
    const Bundle ref = read_bundle(p.path("reference"));
    c.target_edges = target_edge_count(nodes.graph.num_nodes(), ref.graph.num_nodes(), ref.graph.num_edges());
  }
  c.iterations = p.get<std::size_t>("iterations", 100);
  c.batch_size = p.get<std::size_t>("batch_size", 100);
  c.refresh_every = p.get<std::size_t>("refresh_every", c.refresh_every);
  c.seed = seed;
  const double burn_in = p.get<double>("burn_in", 0.2);
  p.finish();

  const GenerationResult r = generate_graph(nodes.graph.nodes(), gae, c);
  out.bundle(r.graph, nodes.ids);
  {
    auto f = out.open("history.csv");
    write_history_csv(f, r.history);
  }
  json diag;
  if (!r.history.steps.empty()) {
    const ChainDiagnostics d = chain_diagnostics(r.history, burn_in);
    diag = {{"burn_in_steps", d.burn_in_steps},
            {"mean_edges", d.mean_edges},
            {"add_steps", d.add_steps},
            {"delete_steps", d.delete_steps},
            {"add_accept_ratio", number_or_null(d.add_accept_ratio)},
            {"delete_accept_ratio", number_or_null(d.delete_accept_ratio)},
            {"max_deviation", d.max_deviation},
            {"drifted", d.drifted}};
  }
  out.json_file("diagnostics.json",
                {{"target_edges", c.target_edges}, {"iterations", c.iterations}, {"chain", diag}});
  return {{"nodes", r.graph.num_nodes()},
          {"edges", r.graph.num_edges()},
          {"target_edges", c.target_edges},
          {"drifted", diag.is_null() ? json(false) : diag["drifted"]}};
}

json fit_summary(const ErgmFit& fit) {
  json theta = json::object();
  for (std::size_t k = 0; k < fit.theta.size(); ++k) theta[term_name(fit.spec.terms[k])] = fit.theta[k];
  return {{"theta", theta}, {"converged", fit.converged}, {"degenerate", fit.degenerate}, {"dyads", fit.dyads}};
}

json cmd_ergm_fit(Params& p, Artifacts& out, std::uint64_t seed) {
  const Bundle b = read_bundle(p.path("graph"));
  const ErgmSpec spec = parse_ergm_spec(p.get<std::string>("terms", "edges"));
  MpleConfig c;
  c.max_iterations = p.get<std::size_t>("max_iterations", c.max_iterations);
  c.tolerance = p.get<double>("tolerance", c.tolerance);
  c.max_nodes = p.get<std::size_t>("max_nodes", c.max_nodes);
  c.sample_dyads = p.get<std::size_t>("sample_dyads", c.sample_dyads);
  c.edge_balanced = p.get<bool>("edge_balanced", c.edge_balanced);
  c.seed = mix_seed(seed, 1);
  std::optional<std::pair<std::size_t, std::size_t>> snowball;
  if (p.has("snowball")) {
    const json s = p.raw("snowball");
    try {
      snowball = std::make_pair(s.value("seeds", std::size_t{5}), s.value("waves", std::size_t{2}));
    } catch (const json::exception&) {
      fail(Errc::kParseError, "ergm-fit: snowball needs integer seeds and waves");
    }
  }
  p.finish();

  ErgmFit fit;
  json sample_info;
  if (snowball) {
    Rng rng(mix_seed(seed, 2));
    const std::size_t n = b.graph.num_nodes();
    const auto seeds = sample_distinct(n, std::min(snowball->first, n), rng);
    const SubgraphSample s = snowball_sample(b.graph, seeds, snowball->second);
    const Subgraph sub = materialize(b.graph, s);
    const DyadMask mask = snowball_mask(s);
    fit = mple_fit(sub.graph, spec, c, &mask);
    sample_info = {{"nodes", sub.graph.num_nodes()}, {"edges", sub.graph.num_edges()}, {"wave_sizes", s.wave_sizes}};
  } else {
    fit = mple_fit(b.graph, spec, c);
  }
  out.json_file("ergm_fit.json", ergm_fit_to_json(fit));
  json summary = fit_summary(fit);
  if (!sample_info.is_null()) summary["snowball"] = sample_info;
  return summary;
}

json cmd_ergm_sim(Params& p, Artifacts& out, std::uint64_t seed) {
  const ErgmFit fit = load_fit(p.path("fit"));
  const Bundle b = read_bundle(p.path("graph"));
  const std::string init = p.get<std::string>("init", "graph");
  McmcConfig c = mcmc_params(p, seed);
  p.finish();
  if (init != "graph" && init != "empty") fail(Errc::kParseError, "ergm-sim: init must be 'graph' or 'empty'");
  const AttributedGraph start = init == "graph" ? b.graph : AttributedGraph(b.graph.nodes(), EdgeList{});
  const McmcResult r = mcmc_sample(fit.spec, fit.theta, start, c);
  {
    auto f = out.open("trace.csv");
    write_trace_csv(f, fit.spec, r);
  }
  {
    auto f = out.open("sample_stats.csv");
    std::vector<std::string> row{"sample"};
    for (const auto& t : fit.spec.terms) row.push_back(term_name(t));
    write_csv_row(f, row);
    for (std::size_t s = 0; s < r.sample_stats.size(); ++s) {
      row.assign(1, std::to_string(s));
      for (double v : r.sample_stats[s]) row.push_back(num(v));
      write_csv_row(f, row);
    }
  }
  out.bundle(AttributedGraph(b.graph.nodes(), EdgeList(r.samples.back())), b.ids);
  json means = json::object();
  for (std::size_t k = 0; k < fit.spec.terms.size(); ++k) {
    double m = 0;
    for (const auto& s : r.sample_stats) m += s[k];
    means[term_name(fit.spec.terms[k])] = m / static_cast<double>(r.sample_stats.size());
  }
  return {{"samples", r.samples.size()},
          {"accept_ratio", r.proposals ? json(static_cast<double>(r.accepts) / static_cast<double>(r.proposals))
                                       : json(nullptr)},
          {"mean_statistics", means}};
}

json cmd_ergm_gof(Params& p, Artifacts& out, std::uint64_t seed) {
  const ErgmFit fit = load_fit(p.path("fit"));
  const Bundle b = read_bundle(p.path("graph"));
  McmcConfig c = mcmc_params(p, seed);
  c.keep_trace = false;
  p.finish();
  const GofReport r = gof_degree(fit.spec, fit.theta, b.graph, c);
  {
    auto f = out.open("gof.csv");
    write_gof_csv(f, r);
  }
  out.json_file("gof.json", {{"samples", r.samples},
                             {"reference_density", r.reference_density},
                             {"mean_density", r.mean_density}});
  return {{"samples", r.samples}, {"reference_density", r.reference_density}, {"mean_density", r.mean_density}};
}

const std::map<std::string, Command>& commands() {
  static const std::map<std::string, Command> table{
      {"ingest", cmd_ingest},           {"stats", cmd_stats},         {"compare", cmd_compare},
      {"sample", cmd_sample},           {"train-nodeclass", cmd_train_nodeclass},
      {"impute", cmd_impute},           {"train-linkpred", cmd_train_linkpred},
      {"gen-attrs", cmd_gen_attrs},     {"generate", cmd_generate},   {"ergm-fit", cmd_ergm_fit},
      {"ergm-sim", cmd_ergm_sim},       {"ergm-gof", cmd_ergm_gof},
  };
  return table;
}

}  // namespace

json run_command(const std::string& command, const WorkspaceConfig& ws, const fs::path& out_dir) {
  const auto it = commands().find(command);
  if (it == commands().end()) fail(Errc::kValueError, "unknown command '" + command + "'");
  const std::uint64_t seed = command_seed(ws.seed, command);
  Params params(ws.block(command), command, ws);
  Artifacts artifacts(out_dir);
  json summary = it->second(params, artifacts, seed);
  summary["artifacts"] = artifacts.finish();
  summary["command"] = command;
  summary["status"] = "ok";
  summary["seed"] = seed;
  summary["out"] = out_dir.string();
  return summary;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic social network toolkit"};
  app.require_subcommand(1, 1);
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  for (const auto& name : command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "workspace config (JSON)")->required();
    sub->add_option("--seed", seed, "override the global seed");
    sub->add_option("--out", out_dir, "output directory for this command");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    WorkspaceConfig ws = WorkspaceConfig::load(config);
    if (seed) ws.seed = *seed;
    const fs::path dir = out_dir.empty() ? ws.default_out(command) : fs::path(out_dir);
    out << dump_json(run_command(command, ws, dir)) << '\n';
    return 0;
  } catch (const Error& e) {
    err << json{{"status", "error"}, {"command", command}, {"code", errc_name(e.code())}, {"message", e.what()}}.dump()
        << '\n';
  } catch (const std::exception& e) {
    err << json{{"status", "error"}, {"command", command}, {"code", "IoError"}, {"message", e.what()}}.dump() << '\n';
  }
  return 1;
}

}  // namespace socgen

#include "socgen/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "socgen/error.hpp"
#include "socgen/gnn.hpp"

namespace socgen {

namespace fs = std::filesystem;

namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::kIoError, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::kIoError, "cannot write " + path.string());
  return out;
}

std::string where(const std::string& name, std::size_t line) { return name + " line " + std::to_string(line); }

bool parse_double(const std::string& s, double& v) {
  const char* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  return r.ec == std::errc() && r.ptr == end;
}

}  // namespace

CsvTable read_csv(std::istream& in, const std::string& name) {
  CsvTable t;
  std::vector<std::string> record;
  std::string field;
  std::size_t line = 1, record_line = 1;
  bool quoted = false, in_record = false, field_started = false;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (t.header.empty()) {
      t.header = std::move(record);
    } else if (!(record.size() == 1 && record[0].empty())) {  // skip blank lines
      if (record.size() != t.header.size())
        fail(Errc::kParseError, where(name, record_line) + ": expected " + std::to_string(t.header.size()) +
                                    " fields, got " + std::to_string(record.size()));
      t.rows.push_back(std::move(record));
      t.lines.push_back(record_line);
    }
    record.clear();
    in_record = false;
  };

  char c;
  while (in.get(c)) {
    if (!in_record) {
      in_record = true;
      record_line = line;
    }
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get();
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r' && in.peek() == '\n') {
      continue;
    } else if (c == '\n') {
      end_record();
      ++line;
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (quoted) fail(Errc::kParseError, where(name, record_line) + ": unterminated quote");
  if (in_record) end_record();
  if (t.header.empty()) fail(Errc::kParseError, name + ": missing header row");
  return t;
}

CsvTable read_csv_file(const fs::path& path) {
  auto in = open_in(path);
  return read_csv(in, path.filename().string());
}

void write_csv_row(std::ostream& out, std::span<const std::string> fields) {
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (k) out << ',';
    const std::string& f = fields[k];
    const bool quote = f.find_first_of(",\"\r\n") != std::string::npos ||
                       (!f.empty() && (f.front() == ' ' || f.back() == ' '));
    if (!quote) {
      out << f;
      continue;
    }
    out << '"';
    for (char c : f) {
      if (c == '"') out << '"';
      out << c;
    }
    out << '"';
  }
  out << '\n';
}

std::string format_number(double v) {
  if (std::isnan(v)) return {};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_cell(const Column& column, double value) {
  if (NodeTable::is_missing(value)) return {};
  if (column.categorical()) return column.levels().at(static_cast<std::size_t>(value));
  return format_number(value);
}

Bundle ingest(const fs::path& nodes_csv, const fs::path& edges_csv, const fs::path& schema_json, bool allow_missing) {
  const FeatureSchema schema = schema_from_json(read_json_file(schema_json));
  const CsvTable nodes = read_csv_file(nodes_csv);
  const std::string nodes_name = nodes_csv.filename().string();

  // Header: id column, then every schema column exactly once in any order.
  std::vector<std::size_t> col_of;  // header position -> schema column
  std::vector<bool> seen(schema.size(), false);
  for (std::size_t h = 1; h < nodes.header.size(); ++h) {
    const auto c = schema.find(nodes.header[h]);
    if (!c) fail(Errc::kSchemaError, nodes_name + ": column '" + nodes.header[h] + "' is not in the schema");
    if (seen[*c]) fail(Errc::kSchemaError, nodes_name + ": column '" + nodes.header[h] + "' appears twice");
    seen[*c] = true;
    col_of.push_back(*c);
  }
  for (std::size_t c = 0; c < schema.size(); ++c)
    if (!seen[c]) fail(Errc::kSchemaError, nodes_name + ": schema column '" + schema.column(c).name + "' is missing");

  Bundle b;
  std::vector<double> values(nodes.rows.size() * schema.size(), 0.0);
  std::unordered_map<std::string, NodeId> dense;
  for (std::size_t r = 0; r < nodes.rows.size(); ++r) {
    const auto& row = nodes.rows[r];
    const std::string at = where(nodes_name, nodes.lines[r]);
    if (!dense.emplace(row[0], static_cast<NodeId>(r)).second)
      fail(Errc::kParseError, at + ": repeated node id '" + row[0] + "'");
    b.ids.push_back(row[0]);
    for (std::size_t h = 1; h < row.size(); ++h) {
      const Column& col = schema.column(col_of[h - 1]);
      const std::string& cell = row[h];
      double v = NAN;
      if (cell.empty()) {
        if (!allow_missing) fail(Errc::kParseError, at + ": missing value for '" + col.name + "'");
      } else if (col.categorical()) {
        const auto level = col.level_index(cell);
        if (!level) fail(Errc::kParseError, at + ": '" + cell + "' is not a level of '" + col.name + "'");
        v = static_cast<double>(*level);
      } else {
        if (!parse_double(cell, v)) fail(Errc::kParseError, at + ": '" + cell + "' is not a number");
        if (v < col.range().min || v > col.range().max)
          fail(Errc::kParseError, at + ": " + cell + " is outside the range of '" + col.name + "'");
      }
      values[r * schema.size() + col_of[h - 1]] = v;
    }
  }
  NodeTable table(schema, nodes.rows.size(), std::move(values), allow_missing);

  const CsvTable edges = read_csv_file(edges_csv);
  const std::string edges_name = edges_csv.filename().string();
  if (edges.header.size() < 2) fail(Errc::kParseError, edges_name + ": expected src and dst columns");
  std::vector<Edge> list;
  std::unordered_set<std::uint64_t> keys;
  for (std::size_t r = 0; r < edges.rows.size(); ++r) {
    const auto& row = edges.rows[r];
    NodeId ends[2];
    for (int k = 0; k < 2; ++k) {
      const auto it = dense.find(row[k]);
      if (it == dense.end())
        fail(Errc::kIndexError, where(edges_name, edges.lines[r]) + ": unknown node id '" + row[k] + "'");
      ends[k] = it->second;
    }
    if (ends[0] == ends[1]) {
      ++b.self_loops;
      continue;
    }
    if (!keys.insert(pair_key(ends[0], ends[1])).second) {
      ++b.duplicate_edges;
      continue;
    }
    list.push_back(canonical(ends[0], ends[1]));
  }
  b.graph = AttributedGraph(std::move(table), EdgeList(std::move(list)));
  return b;
}

Bundle read_bundle(const fs::path& dir, bool allow_missing) {
  return ingest(dir / "nodes.csv", dir / "edges.csv", dir / "schema.json", allow_missing);
}

void write_bundle(const fs::path& dir, const AttributedGraph& graph, std::span<const std::string> ids) {
  const std::size_t n = graph.num_nodes();
  if (!ids.empty() && ids.size() != n) fail(Errc::kDimensionError, "one external id per node is required");
  auto id = [&](NodeId v) { return ids.empty() ? std::to_string(v) : ids[v]; };
  fs::create_directories(dir);
  const NodeTable& t = graph.nodes();
  const FeatureSchema& schema = t.schema();

  write_json_file(dir / "schema.json", schema_to_json(schema));
  auto nodes = open_out(dir / "nodes.csv");
  std::vector<std::string> fields{"id"};
  for (const auto& c : schema.columns()) fields.push_back(c.name);
  write_csv_row(nodes, fields);
  for (NodeId v = 0; v < n; ++v) {
    fields.assign(1, id(v));
    for (std::size_t c = 0; c < schema.size(); ++c) fields.push_back(format_cell(schema.column(c), t.at(v, c)));
    write_csv_row(nodes, fields);
  }
  auto edges = open_out(dir / "edges.csv");
  edges << "src_id,dst_id\n";
  for (const auto& e : graph.edges()) {
    const std::string pair[2] = {id(e.src), id(e.dst)};
    write_csv_row(edges, pair);
  }
  if (!nodes || !edges) fail(Errc::kIoError, "failed writing bundle to " + dir.string());
}

namespace {

void dump_to(std::string& out, const nlohmann::json& j, int indent, int depth) {
  const auto newline = [&](int d) {
    if (indent < 0) return;
    out.push_back('\n');
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case nlohmann::json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? format_number(v) : "null";
      return;
    }
    case nlohmann::json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out.push_back('[');
      bool first = true;
      for (const auto& x : j) {
        if (!first) out.push_back(',');
        first = false;
        newline(depth + 1);
        dump_to(out, x, indent, depth + 1);
      }
      newline(depth);
      out.push_back(']');
      return;
    }
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out.push_back('{');
      bool first = true;
      for (const auto& [k, x] : j.items()) {
        if (!first) out.push_back(',');
        first = false;
        newline(depth + 1);
        out += nlohmann::json(k).dump();
        out += indent < 0 ? ":" : ": ";
        dump_to(out, x, indent, depth + 1);
      }
      newline(depth);
      out.push_back('}');
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string dump_json(const nlohmann::json& j, int indent) {
  std::string out;
  dump_to(out, j, indent, 0);
  return out;
}

nlohmann::json read_json_file(const fs::path& path) {
  auto in = open_in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::kParseError, path.filename().string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << dump_json(j, 2) << '\n';
  if (!out) fail(Errc::kIoError, "failed writing " + path.string());
}

}  // namespace socgen

#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "socgen/graph.hpp"

namespace socgen {

// ---------------------------------------------------------------------------
// CSV: comma-separated, mandatory header, quotes only where needed.

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;  // 1-based source line of each row
};

/// ParseError (with the line number) for unterminated quotes or a row whose
/// width differs from the header. `name` is used in messages.
CsvTable read_csv(std::istream& in, const std::string& name);
CsvTable read_csv_file(const std::filesystem::path& path);
void write_csv_row(std::ostream& out, std::span<const std::string> fields);

/// 17 significant digits ("%.17g"); NaN becomes the empty field.
std::string format_number(double v);

// ---------------------------------------------------------------------------
// Graph bundles: nodes.csv (external id, then schema columns), edges.csv
// (src_id, dst_id, further columns ignored), schema.json.

struct Bundle {
  AttributedGraph graph;
  std::vector<std::string> ids;  // external id per dense node id
  std::size_t duplicate_edges = 0;
  std::size_t self_loops = 0;
};

/// Node ids are densified in file order; duplicate edges are collapsed and
/// self-loops dropped, both counted. SchemaError for a header column not in
/// the schema or a schema column missing from the header; ParseError with
/// the line number for bad cells or repeated ids; IndexError for an edge
/// endpoint that is not a node. Empty cells are missing values and only
/// accepted with allow_missing.
Bundle ingest(const std::filesystem::path& nodes_csv, const std::filesystem::path& edges_csv,
              const std::filesystem::path& schema_json, bool allow_missing = false);
Bundle read_bundle(const std::filesystem::path& dir, bool allow_missing = false);

/// Writes the three bundle files into dir (created if needed). With empty
/// ids the dense ids are used.
void write_bundle(const std::filesystem::path& dir, const AttributedGraph& graph,
                  std::span<const std::string> ids = {});

/// Cell text of a node-table value: level name, number, or "" when missing.
std::string format_cell(const Column& column, double value);

/// Like json::dump, but floating values use format_number so artifacts carry
/// 17 significant digits; NaN and infinities become null. indent < 0 gives
/// one line.
std::string dump_json(const nlohmann::json& j, int indent = -1);

nlohmann::json read_json_file(const std::filesystem::path& path);
/// dump_json with two-space indent, trailing newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace socgen

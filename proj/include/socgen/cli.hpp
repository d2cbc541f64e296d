#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace socgen {

/// Command names, in rough pipeline order.
const std::vector<std::string>& command_names();

/// Seed handed to a command: mix_seed(seed, fnv1a(command)).
std::uint64_t command_seed(std::uint64_t seed, const std::string& command);

/// Parsed config file. Top-level keys are "seed", "out" and one parameter
/// block per command, keyed by the command name. Relative paths in the file
/// resolve against the file's directory.
struct WorkspaceConfig {
  std::filesystem::path base;
  nlohmann::json root = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::filesystem::path out = "out";

  /// IoError when the file cannot be read, ParseError for bad JSON or an
  /// unknown top-level key.
  static WorkspaceConfig load(const std::filesystem::path& file);
  static WorkspaceConfig from_json(const nlohmann::json& j, const std::filesystem::path& base);

  nlohmann::json block(const std::string& command) const;
  std::filesystem::path resolve(const std::string& path) const;
  /// out / command.
  std::filesystem::path default_out(const std::string& command) const;
};

/// Runs one command, writing its artifacts into out_dir, and returns the
/// summary object. Every artifact is checked after writing (bundles are read
/// back). Library errors propagate as socgen::Error; an unknown parameter
/// key is a ParseError.
nlohmann::json run_command(const std::string& command, const WorkspaceConfig& ws,
                           const std::filesystem::path& out_dir);

/// `socgen <command> --config FILE [--seed N] [--out DIR]`. Prints the summary
/// as one JSON line on `out`; on failure prints {"status":"error",...} on
/// `err` and returns 1 (2 for usage errors).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace socgen

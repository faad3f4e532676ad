#pragma once

#include "carnot/config.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace carnot {

inline constexpr int kSchemaVersion = 1;

/// git-describe style id captured at configure time ("unknown" outside a checkout).
std::string build_id();

const std::vector<std::string>& command_names();
bool is_command(const std::string& name);

struct CommandOptions {
  std::optional<std::string> dump_matrix;
};

struct CommandOutput {
  nlohmann::json result;
  /// (file name, contents) written next to the report.
  std::vector<std::pair<std::string, std::string>> side_files;
  /// One line for the terminal.
  std::string summary;
};

/// Runs one command on a validated config. Throws carnot::Error on failure.
CommandOutput run_command(const std::string& command, const RunConfig& cfg, const CommandOptions& options = {});

/// {schema_version, command, build_id, config, result}.
nlohmann::json make_report(const std::string& command, const RunConfig& cfg, const nlohmann::json& result);

/// Writes <dir>/<command>.json (2-space indent, trailing newline) and the side
/// files; creates dir. Returns the report path.
std::string write_outputs(const std::string& dir, const std::string& command, const nlohmann::json& report,
                          const CommandOutput& output);

nlohmann::json to_json(const HypothesisVerdict& v);
nlohmann::json to_json(const ScanTable& t);
nlohmann::json to_json(const CertifyReport& r);
nlohmann::json to_json(const SpectrumResult& r);
nlohmann::json to_json(const InequalityTable& t);
nlohmann::json to_json(const ChiSquareResult& r);
nlohmann::json to_json(const PerturbationCertificate& c);

}  // namespace carnot

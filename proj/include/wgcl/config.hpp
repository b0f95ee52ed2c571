#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wgcl/data.hpp"
#include "wgcl/pipeline.hpp"

namespace wgcl {

// JSON forms of the configuration types. Readers reject unknown keys and
// report the offending field path (e.g. "experiment.similarity.beta") in a
// ConfigError. Absent keys keep their defaults.

nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_from_json(const nlohmann::json& j,
                                      const std::string& path = "experiment");

nlohmann::json to_json(const SbmSpec& spec);
SbmSpec sbm_from_json(const nlohmann::json& j, const std::string& path = "sbm");

struct DataPaths {
  std::filesystem::path edges;
  std::filesystem::path features;
  std::filesystem::path labels;
};

struct OutputPaths {
  std::filesystem::path dir = "out";
  std::filesystem::path similarity_cache;  // default: <dir>/similarity.bin
  std::filesystem::path embeddings;        // default: <dir>/embeddings.csv
  std::filesystem::path report;            // default: <dir>/report.jsonl
  std::filesystem::path table;             // default: <dir>/ablation.csv
  std::filesystem::path checkpoint;        // default: <dir>/checkpoint.bin
};

/// Everything one CLI invocation needs. Exactly one of `data` and
/// `synthetic` is set.
struct CliConfig {
  std::optional<DataPaths> data;
  std::optional<SbmSpec> synthetic;
  OutputPaths output;
  ExperimentConfig experiment;
  std::vector<std::uint64_t> seeds{0};
};

CliConfig cli_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
CliConfig load_cli_config(const std::filesystem::path& path);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace wgcl

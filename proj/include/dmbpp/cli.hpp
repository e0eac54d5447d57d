#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "dmbpp/domain.hpp"
#include "dmbpp/gibbs.hpp"

namespace dmbpp::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";

// ------------------------------------------------------------------ ingestion

enum class CompositionMode { Normalize, Assert };

/// Normalize: d+1 raw part columns divided by their sum, last part dropped.
/// Assert: d stored coordinates that must already lie in the simplex.
struct SimplexGroup {
  std::string name;
  std::vector<std::string> columns;
  CompositionMode mode = CompositionMode::Normalize;
};

/// Rescaled to (x - min) / (max - min).
struct CubeColumn {
  std::string column;
  double min = 0.0;
  double max = 1.0;
};

struct IngestConfig {
  std::string path;
  std::vector<SimplexGroup> simplex;
  std::vector<CubeColumn> cube;
  double interior_epsilon = kDefaultInteriorEpsilon;
};

struct Dataset {
  DomainSpec spec;
  std::vector<MixedPoint> points;
  std::vector<long> source_rows;  // 1-based data row of each point
  long rows_read = 0;
  long rows_dropped = 0;
};

DomainSpec ingest_domain(const IngestConfig& cfg);
/// Rows with a missing mapped cell (empty or NA) are dropped. Throws ParseError naming the
/// row and column, RescaleOutOfRange, SimplexViolation or EmptyDataset.
Dataset ingest(std::istream& in, const IngestConfig& cfg);
Dataset ingest(const IngestConfig& cfg);

// ------------------------------------------------------------------ configuration

/// Reads a JSON file; missing path gives an empty object.
Json load_config(const std::string& path);
/// Applies "a.b.c=value" overrides; the value is parsed as JSON when possible, else kept as a string.
void apply_override(Json& config, const std::string& assignment);

IngestConfig ingest_config_from(const Json& config);
ModelConfig model_config_from(const Json& config, const DomainSpec& spec);
SamplerConfig sampler_config_from(const Json& config);

// ------------------------------------------------------------------ commands

/// Written to <output_dir>/manifest.json before computation and rewritten on completion.
struct RunManifest {
  std::string command;
  Json config;
  std::uint64_t seed = 0;
  std::string version = kVersion;
  std::string started;
  std::string finished;
  std::string status = "running";
  std::string error;
  std::vector<std::string> outputs;
  double runtime_seconds = 0.0;

  Json to_json() const;
};

/// Each command reads its section of the configuration, writes its outputs under
/// config["output_dir"] and returns the written paths. On failure every output except the
/// manifest is removed and the manifest records the error.
std::vector<std::string> cmd_fit(const Json& config);
std::vector<std::string> cmd_predict(const Json& config);
std::vector<std::string> cmd_simulate(const Json& config);
std::vector<std::string> cmd_report(const Json& config);

/// 0 ok, 2 configuration or argument error, 3 data error, 4 numeric failure, 1 otherwise.
int exit_code(const std::exception& e);

}  // namespace dmbpp::cli

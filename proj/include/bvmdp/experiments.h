#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bvmdp/distribution.h"

namespace bvmdp {

inline constexpr const char* kArtifactVersion = "1.0.0";

struct ExperimentInfo {
  std::string name;
  std::string description;
  std::string csv_columns;
};
const std::vector<ExperimentInfo>& experiment_registry();

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  std::vector<std::size_t> n_list;
  std::size_t reps = 0;
  std::vector<BaseMeasureSpec> nu_list;
  BaseDistribution f0 = BaseDistribution::uniform();
  std::vector<double> t_grid;
  std::string out;
  int workers = 1;
  // The whole config object; experiment-specific keys are read from here.
  nlohmann::json params;
};

// Validates every field against the target operation before any sampling;
// violations throw ConfigError naming the field.
ExperimentConfig parse_config(const nlohmann::json& j);
nlohmann::json read_json_file(const std::filesystem::path& path);

struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n;
  std::optional<std::size_t> reps;
  std::optional<std::string> out;
  std::optional<int> workers;
};
nlohmann::json apply_overrides(nlohmann::json j, const ConfigOverrides& overrides);

struct Verdict {
  std::string criterion;
  std::string target;
  double estimate = 0.0;
  std::string tolerance;
  bool pass = false;
};

struct RunManifest {
  nlohmann::json config;
  std::string version = kArtifactVersion;
  double wall_time_seconds = 0.0;
  std::vector<Verdict> verdicts;
  std::map<std::string, std::string> digests;
  bool all_pass() const;
};
void to_json(nlohmann::json& j, const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);

// Writes <out>/records.csv, <out>/summary.json and <out>/manifest.json.
RunManifest run_experiment(const ExperimentConfig& config);

struct ReportRow {
  std::string manifest;
  Verdict verdict;
};
struct Report {
  std::vector<ReportRow> rows;
  bool all_pass() const;
};
Report build_report(const std::vector<std::filesystem::path>& manifests);
void write_report_text(std::ostream& out, const Report& report);
void write_report_csv(std::ostream& out, const Report& report);

std::string sha256_file(const std::filesystem::path& path);

}  // namespace bvmdp

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ethlab/config.hpp"

namespace ethlab {

enum class Stage { generate, extract, code_error, dynamics, bounds };

std::string to_string(Stage stage);
const std::vector<Stage>& all_stages();

struct StageFile {
  std::string path;  ///< relative to the run directory
  std::string sha256;
};

struct StageRecord {
  Stage stage = Stage::generate;
  std::vector<StageFile> files;
  double wall_seconds = 0.0;
  /// bounds only: some check exceeded the slack factor.
  bool violation = false;
  std::optional<std::string> lambda_source;
};

/// Exit status policy shared by the CLI.
enum class RunStatus { ok = 0, error = 1, violation = 2 };

struct RunManifest {
  std::string config_hash;
  std::string artifact_version;
  std::vector<StageRecord> stages;
  std::optional<std::string> lambda_source;
  RunStatus status = RunStatus::ok;
  std::string error;

  nlohmann::json to_json() const;
};

/// Runs one stage in `dir`, reading the files written by earlier stages.
StageRecord run_stage(Stage stage, const RunConfig& config, const std::filesystem::path& dir);

/// All stages in order, then manifest.json. Stage errors are caught and
/// reported through the manifest status.
RunManifest run(const RunConfig& config, const std::filesystem::path& dir);

struct SweepResult {
  std::vector<SweepPoint> points;
  std::vector<RunManifest> manifests;  ///< parallel to points
  RunStatus status = RunStatus::ok;
};

/// Each point runs in dir/point_NNNN on up to `workers` threads; then
/// aggregate.csv and sweep.json are written in sweep-key order.
SweepResult sweep(const RunConfig& config, const std::filesystem::path& dir, std::size_t workers = 1);

/// The bundled L=10 Ising demo (beta = 1, k = 1, d = 1).
RunConfig demo_config();

std::string artifact_version();

}  // namespace ethlab

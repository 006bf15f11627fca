#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "stmt/efficiency_bench.hpp"
#include "stmt/eval_harness.hpp"
#include "stmt/model_backend.hpp"
#include "stmt/statement_builder.hpp"

namespace stmt {

enum class Stage { build_data, train, eval, bench };

std::string_view to_string(Stage s);
// Comma-separated stage names, returned in dependency order. Throws
// InvalidConfigError on an unknown name.
std::vector<Stage> parse_stages(std::string_view list);

struct TrainStage {
  std::string backend = "tiny-encoder";
  TrainConfig config;
  std::optional<std::filesystem::path> dataset;  // else the build-data output
};

struct EvalStage {
  EvalManifest manifest;
  std::vector<std::filesystem::path> models;  // else the train output
  std::string label;
};

struct BenchStage {
  BenchConfig config;
  std::optional<std::filesystem::path> model;  // else the train output
  std::string label;
};

struct RunConfig {
  std::optional<std::uint64_t> seed;
  std::filesystem::path output_root;
  bool copy_config = true;
  bool record_digests = true;
  std::optional<MixtureSpec> mixture;
  std::optional<TrainStage> train;
  std::optional<EvalStage> eval;
  std::optional<BenchStage> bench;

  // Every default resolved.
  nlohmann::json resolved() const;

  std::filesystem::path data_dir() const { return output_root / "data"; }
  std::filesystem::path dataset_path() const { return data_dir() / "dataset.jsonl"; }
  std::filesystem::path model_dir() const { return output_root / "model"; }
  std::filesystem::path eval_dir() const { return output_root / "eval"; }
  std::filesystem::path bench_dir() const { return output_root / "bench"; }
};

struct ConfigCheck {
  std::optional<RunConfig> config;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty() && config.has_value(); }
};

// Normalizes a run configuration and lists every violation found for the
// requested stages: unknown keys, missing stage blocks, missing files and
// unmet stage dependencies.
ConfigCheck validate_config(const std::filesystem::path& path, const std::vector<Stage>& stages);
ConfigCheck validate_config_json(const nlohmann::json& j, const std::filesystem::path& base_dir,
                                 const std::vector<Stage>& stages);

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitStage = 3 };

// Runs stages in dependency order and stops at the first failure.
int run(const RunConfig& config, const std::vector<Stage>& stages, std::ostream& log);

}  // namespace stmt

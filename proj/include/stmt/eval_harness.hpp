#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "stmt/corpus.hpp"
#include "stmt/zeroshot_classifier.hpp"

namespace stmt {

struct EvalTaskSpec {
  std::string task_id;
  std::filesystem::path manifest;         // test corpus
  std::vector<std::string> languages;     // empty: every language of the corpus
  std::vector<std::string> template_ids;  // empty: all templates of the task
  std::string template_language = "en";
};

struct EvalOptions {
  Aggregation aggregation = Aggregation::mean;
  bool include_negated = false;
  std::size_t max_statement_batch = 256;
};

struct EvalManifest {
  std::vector<EvalTaskSpec> tasks;
  std::set<std::string> seen_languages;
  EvalOptions options;
  std::optional<std::filesystem::path> template_pack;
  std::optional<std::filesystem::path> task_catalog;
};

// Relative paths resolve against base_dir. Unknown keys raise InvalidConfigError.
EvalManifest eval_manifest_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
EvalManifest load_eval_manifest(const std::filesystem::path& path);
nlohmann::json to_json(const EvalManifest& m);

struct LanguageAccuracy {
  std::string language;
  std::size_t correct = 0;
  std::size_t total = 0;

  double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

struct TaskEval {
  std::string task_id;
  std::vector<LanguageAccuracy> languages;  // sorted by code
  std::vector<std::string> template_ids;
  Aggregation aggregation = Aggregation::mean;
  double random_baseline = 0.0;
  std::size_t dropped_templates = 0;
  std::vector<std::string> warnings;

  double macro() const;  // mean over languages
  double micro() const;  // pooled examples
  std::size_t total() const;
  std::size_t correct() const;
};

TaskEval evaluate_task(const EvalTaskSpec& spec, const Corpus& corpus, const TaskSchema& schema,
                       const TemplateRegistry& registry, Scorer& model, const EvalOptions& options = {});

// One trained model (one seed) evaluated on every task.
struct RunEval {
  std::string model;  // rows of the summary table group runs by this label
  std::uint64_t seed = 0;
  std::optional<std::size_t> parameters;
  std::vector<TaskEval> tasks;
};

std::vector<RunEval> evaluate_runs(const EvalManifest& manifest, std::span<ModelHandle* const> models,
                                   const std::string& model_label);

struct CellStats {
  double mean = 0.0;
  double std = 0.0;  // population std across runs
  std::vector<double> per_run;
};

struct TaskSummary {
  std::string task_id;
  CellStats macro;  // task mean over languages, across runs
  CellStats micro;
  double mean_language_std = 0.0;  // std across runs per language, averaged over languages
  std::map<std::string, CellStats> per_language;
  std::optional<double> seen_mean;
  std::optional<double> unseen_mean;
  double random_baseline = 0.0;
  std::vector<std::string> template_ids;
};

struct ModelSummary {
  std::string model;
  std::optional<std::size_t> parameters;
  std::size_t runs = 0;
  std::vector<TaskSummary> tasks;
  double geometric_mean = 0.0;  // across task macro means
  bool geometric_zero = false;  // a task scored zero
  std::optional<double> seen_mean;
  std::optional<double> unseen_mean;
};

struct EvalReport {
  std::vector<ModelSummary> models;
  std::vector<RunEval> runs;
  std::set<std::string> seen_languages;
  std::string aggregation;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

// Throws InvalidInputError on an empty run list.
EvalReport aggregate(const std::vector<RunEval>& runs, const std::set<std::string>& seen_languages);

double arithmetic_mean(std::span<const double> xs);
double population_std(std::span<const double> xs);
// exp(mean(log x)); 0 with *zero set when an input is 0.
double geometric_mean(std::span<const double> xs, bool* zero = nullptr);

// Chance accuracy: example-weighted mean of 1/n_candidates.
double random_baseline(const TaskSchema& schema, std::span<const FieldMap> examples = {});

// report.json, results.md, per_language.csv and one bars_<task>.csv per task.
void write_report(const EvalReport& report, const std::filesystem::path& dir);
std::string render_table(const EvalReport& report);
// One SVG bar chart per task from a report.json. Returns the written files.
std::vector<std::filesystem::path> plot_report(const EvalReport& report, const std::filesystem::path& dir);

}  // namespace stmt

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "stmt/corpus.hpp"
#include "stmt/languages.hpp"
#include "stmt/template_registry.hpp"

namespace stmt {

enum class TemplateLanguageMode { english_only, translated };

struct MixtureEntry {
  std::string dataset_id;
  std::string task_id;
  // Empty means: the task's language coverage intersected with the spec's
  // language set.
  std::vector<std::string> languages;
  std::filesystem::path manifest;
};

struct MixtureSpec {
  std::vector<MixtureEntry> entries;
  std::int64_t rows_per_language_cap = 1500;
  std::int64_t per_truth_quota = 750;
  // When set, the per-truth quota is rescaled so the whole mixture holds
  // about this many statements (spread evenly over the non-empty groups).
  std::optional<std::int64_t> target_total;
  bool include_mt = true;
  TemplateLanguageMode template_language_mode = TemplateLanguageMode::english_only;
  std::optional<LanguagePreset> language_preset = LanguagePreset::langs11;
  std::vector<std::string> explicit_languages;  // used when language_preset is empty
  std::vector<std::string> extra_languages;     // user-registered codes outside the 25-language table
  std::uint64_t seed = 0;
  double validation_fraction = 0.05;
  std::filesystem::path template_pack;
  std::vector<std::filesystem::path> translated_packs;
  std::filesystem::path task_catalog;
  std::filesystem::path base_dir;

  // The resolved language set, in preset (or declaration) order.
  std::vector<std::string> language_set() const;
};

MixtureSpec load_mixture_spec(const std::filesystem::path& path);
MixtureSpec mixture_spec_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
// Canonical form: every default resolved, keys sorted.
nlohmann::json to_json(const MixtureSpec& spec);
std::string spec_digest(const MixtureSpec& spec);

// Throws InvalidSpecError on negative caps/quotas, unknown language codes or
// duplicate (dataset, language) groups.
void validate_mixture_spec(const MixtureSpec& spec, const TaskCatalog& catalog);

// One entry per training dataset of the paper's mixture (13 datasets over 9
// task types), with languages left to the preset.
std::vector<MixtureEntry> paper_mixture_entries(const std::filesystem::path& corpora_dir);

enum class Split { train, validation };
std::string_view to_string(Split s);

struct StatementRecord {
  std::string statement;
  bool truth = false;
  std::string task_id;
  std::string dataset_id;
  std::string language;
  std::string template_id;
  Polarity polarity = Polarity::affirmative;
  std::optional<std::string> candidate;
  std::string gold;
  std::string source_row_id;
  Split split = Split::train;

  bool operator==(const StatementRecord&) const = default;
};

struct DatasetHeader {
  int format_version = 1;
  std::string spec_digest;
  std::uint64_t seed = 0;
  std::string created_utc;

  bool operator==(const DatasetHeader&) const = default;
};

struct StatementDataset {
  DatasetHeader header;
  std::vector<StatementRecord> records;

  std::vector<const StatementRecord*> split(Split s) const;
};

struct GroupReport {
  std::string dataset_id;
  std::string task_id;
  std::string language;
  std::size_t rows_available = 0;
  std::size_t rows_sampled = 0;
  std::size_t distinct_rows_used = 0;
  std::size_t statements = 0;
  std::size_t true_count = 0;
  std::size_t false_count = 0;
  std::size_t validation_count = 0;
  bool template_fallback = false;
};

struct BuildReport {
  std::vector<GroupReport> groups;
  std::size_t total = 0;
  std::size_t true_total = 0;
  std::size_t false_total = 0;
  std::uint64_t seed = 0;
  std::string spec_digest;
  std::int64_t per_truth_quota = 0;
  std::vector<std::string> notes;

  nlohmann::json to_json() const;
};

// Rows of `language` in corpus order when there are at most `cap` of them,
// otherwise exactly `cap` rows drawn uniformly without replacement (returned
// in corpus order). cap < 0 throws InvalidSpecError.
std::vector<CorpusRow> sample_rows(std::span<const CorpusRow> corpus, std::string_view language,
                                   std::int64_t cap, std::uint64_t seed);

// Truth of a statement. With a candidate: affirmative <-> candidate == gold,
// negated flips it. Without one (pair templates), the candidate is taken to be
// `positive_label`.
bool truth_label(Polarity polarity, const std::optional<std::string>& candidate, const std::string& gold,
                 std::string_view positive_label = {});

// Inputs for one (dataset, language) group.
struct GroupJob {
  std::string dataset_id;
  std::string language;
  const TaskSchema* schema = nullptr;
  std::vector<const StatementTemplate*> templates;
  std::int64_t per_truth_quota = 0;
  std::uint64_t seed = 0;
};

// Emits per_truth_quota true and per_truth_quota false statements. Every
// emission samples a source row, then a template uniformly among those able
// to produce the wanted truth value for that row, then (when needed) a wrong
// candidate uniformly. True emissions cycle through the gold classes of
// fixed-label tasks. All records are tagged Split::train.
std::vector<StatementRecord> generate_statements(std::span<const CorpusRow> rows, const GroupJob& job);

// Planned groups in concatenation order with their resolved quotas.
struct GroupPlan {
  std::size_t entry_index = 0;
  std::string dataset_id;
  std::string task_id;
  std::string language;
  std::int64_t per_truth_quota = 0;
};

// `row_counts` maps (dataset_id, language) to available rows; groups without
// rows are left out and reported through `notes`.
std::vector<GroupPlan> plan_mixture(const MixtureSpec& spec, const TaskCatalog& catalog,
                                    const std::map<std::pair<std::string, std::string>, std::size_t>& row_counts,
                                    std::vector<std::string>* notes = nullptr);

// Samples, generates, splits 95/5 (stratified by dataset, language, truth),
// concatenates in plan order and applies one seeded global shuffle. Groups
// are generated in parallel; the output does not depend on thread count.
std::pair<StatementDataset, BuildReport> assemble_mixture(const MixtureSpec& spec,
                                                          const std::map<std::string, Corpus>& corpora,
                                                          const TemplateRegistry& registry,
                                                          const TaskCatalog& catalog = TaskCatalog::builtin());

// Loads every entry's manifest (LoadError naming dataset and path when
// missing), the template pack(s) and builds the mixture.
std::pair<StatementDataset, BuildReport> build_from_spec(const MixtureSpec& spec);

// Location of the shipped template pack.
std::filesystem::path default_template_pack();

// One header line then one JSON object per record.
void write_dataset(const StatementDataset& dataset, const std::filesystem::path& path);
std::string serialize_dataset(const StatementDataset& dataset);
StatementDataset read_dataset(const std::filesystem::path& path);
StatementDataset parse_dataset(std::string_view text);

// UTC creation stamp: SOURCE_DATE_EPOCH when set, else the Unix epoch, so
// equal builds stay byte-identical.
std::string reproducible_timestamp();

}  // namespace stmt

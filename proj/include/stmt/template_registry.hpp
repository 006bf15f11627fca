#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stmt {

// One task example: field name -> text value.
using FieldMap = std::map<std::string, std::string, std::less<>>;

// How the candidate labels of an example are enumerated.
struct LabelSpace {
  enum class Kind {
    fixed,                  // declared label list; gold_field holds the label text
    choice_columns,         // per-example columns; gold_field holds a 0-based index or column name
    gold_plus_distractors,  // gold_field holds the answer; columns hold distractors
  };

  Kind kind = Kind::fixed;
  std::vector<std::string> labels;
  std::vector<std::string> columns;
  std::string gold_field;
  // Binary pair tasks (templates without a candidate slot): the label that an
  // affirmative statement asserts.
  std::optional<std::string> positive_label;
  // Wrong candidates may also be drawn from other rows' gold values.
  bool pool_distractors = false;
};

struct TaskSchema {
  std::string task_id;
  std::vector<std::string> field_names;
  LabelSpace label_space;
  std::vector<std::string> languages;
  bool is_translation = false;

  bool has_field(std::string_view name) const;
};

enum class Polarity { affirmative, negated };

std::string_view to_string(Polarity p);
std::optional<Polarity> parse_polarity(std::string_view s);

struct StatementTemplate {
  std::string template_id;
  std::string task_id;
  std::string pattern;
  std::optional<std::string> candidate_slot;
  // Second slot filled with a competing candidate (e.g. "{{other_text}}").
  std::optional<std::string> contrast_slot;
  // For templates whose wording names the label ("... entails ..."): the
  // label the statement asserts. Such templates carry no candidate slot.
  std::optional<std::string> asserted_label;
  Polarity polarity = Polarity::affirmative;
  std::string language_tag = "en";
  std::optional<std::string> translates;
  bool suspect_heading = false;
};

struct RenderedStatement {
  std::string text;
  std::string template_id;
  std::optional<std::string> candidate;
  std::string language;

  bool operator==(const RenderedStatement&) const = default;
};

// Schemas known to the toolkit, keyed by task id.
class TaskCatalog {
 public:
  // Schemas for every task of the shipped template pack.
  static const TaskCatalog& builtin();

  // Reads a JSON array of schemas (same shape as to_json emits).
  static TaskCatalog load(const std::filesystem::path& path);

  void add(TaskSchema schema);
  void merge(const TaskCatalog& other);
  const TaskSchema* find(std::string_view task_id) const;
  const TaskSchema& get(std::string_view task_id) const;  // throws UnknownTaskError
  std::vector<std::string> task_ids() const;

 private:
  std::map<std::string, TaskSchema, std::less<>> schemas_;
};

// Immutable once built; lookups are keyed by (task_id, language_tag).
class TemplateRegistry {
 public:
  // Throws MalformedPackError (line 0) on a duplicate template id.
  void add(StatementTemplate t);
  void merge(const TemplateRegistry& other);

  std::size_t size() const { return templates_.size(); }
  bool empty() const { return templates_.empty(); }
  std::span<const StatementTemplate> all() const { return templates_; }

  const StatementTemplate* find(std::string_view template_id) const;
  // Templates for a task in one language, in pack order.
  std::vector<const StatementTemplate*> for_task(std::string_view task_id,
                                                 std::string_view language_tag = "en") const;
  std::vector<std::string> languages_for(std::string_view task_id) const;

 private:
  std::vector<StatementTemplate> templates_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
};

// Pack files are JSON arrays of template objects. An empty (or whitespace
// only) file yields an empty registry.
TemplateRegistry load_template_pack(const std::filesystem::path& path,
                                    const TaskCatalog& catalog = TaskCatalog::builtin());
TemplateRegistry parse_template_pack(std::string_view text,
                                     const TaskCatalog& catalog = TaskCatalog::builtin());

struct Violation {
  enum class Kind {
    unterminated_placeholder,
    unknown_placeholder,
    candidate_slot_multiplicity,
    contrast_slot_multiplicity,
    missing_candidate_slot,
    unknown_asserted_label,
    task_mismatch,
  };
  Kind kind;
  std::string detail;

  std::string message() const;
  bool operator==(const Violation&) const = default;
};

// Placeholder names in order of appearance. Unterminated "{{" is reported
// through validate_template, and is skipped here.
std::vector<std::string> placeholders(std::string_view pattern);

std::vector<Violation> validate_template(const StatementTemplate& t, const TaskSchema& schema);

// Literal substitution, no escaping or normalization. `candidate` must be set
// iff the template has a candidate slot; `contrast` fills the contrast slot.
RenderedStatement render(const StatementTemplate& t, const FieldMap& example,
                         const std::optional<std::string>& candidate,
                         const std::optional<std::string>& contrast = std::nullopt,
                         std::string_view language = {});

// Deterministic candidate order; throws DegenerateTaskError when empty.
std::vector<std::string> enumerate_candidates(const TaskSchema& schema, const FieldMap& example);

// The gold label value of an example. Throws InvalidInputError when missing
// or out of range.
std::string gold_value(const TaskSchema& schema, const FieldMap& example);

}  // namespace stmt

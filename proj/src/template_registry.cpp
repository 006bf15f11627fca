#include "stmt/template_registry.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "json.hpp"
#include "stmt/digest.hpp"
#include "stmt/error.hpp"
#include "stmt/json_io.hpp"

namespace stmt {

using nlohmann::json;

bool TaskSchema::has_field(std::string_view name) const {
  return std::find(field_names.begin(), field_names.end(), name) != field_names.end();
}

std::string_view to_string(Polarity p) {
  return p == Polarity::affirmative ? "affirmative" : "negated";
}

std::optional<Polarity> parse_polarity(std::string_view s) {
  if (s == "affirmative") return Polarity::affirmative;
  if (s == "negated") return Polarity::negated;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// TaskCatalog

TaskCatalog TaskCatalog::load(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw LoadError("task catalog '" + path.string() + "': " + e.what());
  }
  if (!doc.is_array()) throw LoadError("task catalog '" + path.string() + "' must be a JSON array");
  TaskCatalog catalog;
  for (const auto& item : doc) catalog.add(item.get<TaskSchema>());
  return catalog;
}

void TaskCatalog::add(TaskSchema schema) {
  auto id = schema.task_id;
  schemas_.insert_or_assign(std::move(id), std::move(schema));
}

void TaskCatalog::merge(const TaskCatalog& other) {
  for (const auto& [id, s] : other.schemas_) add(s);
}

const TaskSchema* TaskCatalog::find(std::string_view task_id) const {
  auto it = schemas_.find(task_id);
  return it == schemas_.end() ? nullptr : &it->second;
}

const TaskSchema& TaskCatalog::get(std::string_view task_id) const {
  if (const auto* s = find(task_id)) return *s;
  throw UnknownTaskError(std::string(task_id));
}

std::vector<std::string> TaskCatalog::task_ids() const {
  std::vector<std::string> out;
  for (const auto& [id, s] : schemas_) out.push_back(id);
  return out;
}

// ---------------------------------------------------------------------------
// TemplateRegistry

void TemplateRegistry::add(StatementTemplate t) {
  if (by_id_.count(t.template_id)) {
    throw MalformedPackError("duplicate template_id '" + t.template_id + "'", 0);
  }
  by_id_.emplace(t.template_id, templates_.size());
  templates_.push_back(std::move(t));
}

void TemplateRegistry::merge(const TemplateRegistry& other) {
  for (const auto& t : other.templates_) add(t);
}

const StatementTemplate* TemplateRegistry::find(std::string_view template_id) const {
  auto it = by_id_.find(template_id);
  return it == by_id_.end() ? nullptr : &templates_[it->second];
}

std::vector<const StatementTemplate*> TemplateRegistry::for_task(std::string_view task_id,
                                                                 std::string_view language_tag) const {
  std::vector<const StatementTemplate*> out;
  for (const auto& t : templates_) {
    if (t.task_id == task_id && t.language_tag == language_tag) out.push_back(&t);
  }
  return out;
}

std::vector<std::string> TemplateRegistry::languages_for(std::string_view task_id) const {
  std::set<std::string> langs;
  for (const auto& t : templates_) {
    if (t.task_id == task_id) langs.insert(t.language_tag);
  }
  return {langs.begin(), langs.end()};
}

// ---------------------------------------------------------------------------
// Pack parsing

namespace {

std::size_t line_at(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + byte, '\n'));
}

// Line on which each element of the top-level array begins. Strings are
// skipped so braces inside patterns do not count.
std::vector<std::size_t> element_lines(std::string_view text) {
  std::vector<std::size_t> lines;
  std::size_t line = 1;
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  bool expect_element = false;
  for (char c : text) {
    if (c == '\n') ++line;
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (depth == 1 && expect_element && !std::isspace(static_cast<unsigned char>(c))) {
      lines.push_back(line);
      expect_element = false;
    }
    switch (c) {
      case '"': in_string = true; break;
      case '[':
      case '{':
        if (++depth == 1) expect_element = true;
        break;
      case ']':
      case '}': --depth; break;
      case ',':
        if (depth == 1) expect_element = true;
        break;
      default: break;
    }
  }
  return lines;
}

const std::set<std::string, std::less<>> kTemplateKeys{
    "template_id",   "task_id",        "language_tag",    "polarity",   "candidate_slot",
    "pattern",       "contrast_slot",  "asserted_label",  "translates", "suspect_heading",
    "note"};

std::optional<std::string> optional_string(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw MalformedPackError(std::string("'") + key + "' must be a string or null", line);
  auto s = it->get<std::string>();
  if (s == "none") return std::nullopt;
  return s;
}

std::string required_string(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw MalformedPackError(std::string("missing string field '") + key + "'", line);
  }
  return it->get<std::string>();
}

}  // namespace

TemplateRegistry parse_template_pack(std::string_view text, const TaskCatalog& catalog) {
  TemplateRegistry registry;
  if (std::all_of(text.begin(), text.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); })) {
    return registry;
  }
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw MalformedPackError(e.what(), line_at(text, e.byte == 0 ? 0 : e.byte - 1));
  }
  if (!doc.is_array()) throw MalformedPackError("pack must be a JSON array", 1);
  const auto lines = element_lines(text);

  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& obj = doc[i];
    const std::size_t line = i < lines.size() ? lines[i] : 0;
    if (!obj.is_object()) throw MalformedPackError("template record must be an object", line);
    for (const auto& [key, value] : obj.items()) {
      if (!kTemplateKeys.count(key)) throw MalformedPackError("unknown key '" + key + "'", line);
    }
    StatementTemplate t;
    t.template_id = required_string(obj, "template_id", line);
    t.task_id = required_string(obj, "task_id", line);
    t.pattern = required_string(obj, "pattern", line);
    t.language_tag = obj.contains("language_tag") ? required_string(obj, "language_tag", line) : "en";
    const auto polarity = required_string(obj, "polarity", line);
    if (auto p = parse_polarity(polarity)) {
      t.polarity = *p;
    } else {
      throw MalformedPackError("polarity must be 'affirmative' or 'negated', got '" + polarity + "'", line);
    }
    if (!obj.contains("candidate_slot")) throw MalformedPackError("missing field 'candidate_slot'", line);
    t.candidate_slot = optional_string(obj, "candidate_slot", line);
    t.contrast_slot = optional_string(obj, "contrast_slot", line);
    t.asserted_label = optional_string(obj, "asserted_label", line);
    t.translates = optional_string(obj, "translates", line);
    if (auto it = obj.find("suspect_heading"); it != obj.end()) {
      if (!it->is_boolean()) throw MalformedPackError("'suspect_heading' must be a boolean", line);
      t.suspect_heading = it->get<bool>();
    }
    if (!catalog.find(t.task_id)) throw UnknownTaskError(t.task_id);
    if (registry.find(t.template_id)) {
      throw MalformedPackError("duplicate template_id '" + t.template_id + "'", line);
    }
    registry.add(std::move(t));
  }
  return registry;
}

TemplateRegistry load_template_pack(const std::filesystem::path& path, const TaskCatalog& catalog) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const LoadError&) {
    throw MalformedPackError("cannot read pack '" + path.string() + "'", 0);
  }
  return parse_template_pack(text, catalog);
}

// ---------------------------------------------------------------------------
// Validation and rendering

std::string Violation::message() const {
  switch (kind) {
    case Kind::unterminated_placeholder: return "unterminated placeholder at \"" + detail + "\"";
    case Kind::unknown_placeholder: return "unknown placeholder \"" + detail + "\"";
    case Kind::candidate_slot_multiplicity: return "candidate slot multiplicity: " + detail;
    case Kind::contrast_slot_multiplicity: return "contrast slot multiplicity: " + detail;
    case Kind::missing_candidate_slot: return "missing candidate slot: " + detail;
    case Kind::unknown_asserted_label: return "unknown asserted label \"" + detail + "\"";
    case Kind::task_mismatch: return "template task '" + detail + "' does not match schema";
  }
  return detail;
}

namespace {

struct Placeholder {
  std::size_t begin;  // offset of "{{"
  std::size_t end;    // offset one past "}}"
  std::string name;
};

// Scans "{{name}}" tokens. Returns the offset of an unterminated "{{", if any.
std::optional<std::size_t> scan(std::string_view pattern, std::vector<Placeholder>& out) {
  std::size_t pos = 0;
  while (true) {
    const auto open = pattern.find("{{", pos);
    if (open == std::string_view::npos) return std::nullopt;
    const auto close = pattern.find("}}", open + 2);
    if (close == std::string_view::npos) return open;
    out.push_back({open, close + 2, std::string(pattern.substr(open + 2, close - open - 2))});
    pos = close + 2;
  }
}

}  // namespace

std::vector<std::string> placeholders(std::string_view pattern) {
  std::vector<Placeholder> found;
  scan(pattern, found);
  std::vector<std::string> names;
  names.reserve(found.size());
  for (auto& p : found) names.push_back(std::move(p.name));
  return names;
}

std::vector<Violation> validate_template(const StatementTemplate& t, const TaskSchema& schema) {
  using K = Violation::Kind;
  std::vector<Violation> out;
  if (t.task_id != schema.task_id) out.push_back({K::task_mismatch, t.task_id});

  std::vector<Placeholder> found;
  if (auto bad = scan(t.pattern, found)) {
    out.push_back({K::unterminated_placeholder, t.pattern.substr(*bad, 20)});
  }

  std::size_t candidate_hits = 0;
  std::size_t contrast_hits = 0;
  std::set<std::string> reported;
  for (const auto& p : found) {
    if (t.candidate_slot && p.name == *t.candidate_slot) {
      ++candidate_hits;
    } else if (t.contrast_slot && p.name == *t.contrast_slot) {
      ++contrast_hits;
    } else if (!schema.has_field(p.name) && reported.insert(p.name).second) {
      out.push_back({K::unknown_placeholder, p.name});
    }
  }

  if (t.candidate_slot) {
    if (candidate_hits != 1) {
      out.push_back({K::candidate_slot_multiplicity,
                     "\"" + *t.candidate_slot + "\" appears " + std::to_string(candidate_hits) + " times"});
    }
  } else if (t.asserted_label) {
    const auto& labels = schema.label_space.labels;
    if (schema.label_space.kind != LabelSpace::Kind::fixed ||
        std::find(labels.begin(), labels.end(), *t.asserted_label) == labels.end()) {
      out.push_back({K::unknown_asserted_label, *t.asserted_label});
    }
  }

  if (t.contrast_slot) {
    if (contrast_hits > 1) {
      out.push_back({K::contrast_slot_multiplicity,
                     "\"" + *t.contrast_slot + "\" appears " + std::to_string(contrast_hits) + " times"});
    }
    if (!t.candidate_slot) {
      out.push_back({K::missing_candidate_slot, "contrast slot requires a candidate slot"});
    }
  }
  return out;
}

RenderedStatement render(const StatementTemplate& t, const FieldMap& example,
                         const std::optional<std::string>& candidate,
                         const std::optional<std::string>& contrast, std::string_view language) {
  if (t.candidate_slot.has_value() != candidate.has_value()) {
    throw RenderError(t.candidate_slot ? "template '" + t.template_id + "' needs a candidate"
                                       : "template '" + t.template_id + "' takes no candidate",
                      t.candidate_slot.value_or(""));
  }
  std::vector<Placeholder> found;
  if (scan(t.pattern, found)) {
    throw RenderError("template '" + t.template_id + "' has an unterminated placeholder", "");
  }

  std::string text;
  text.reserve(t.pattern.size() + 64);
  std::size_t pos = 0;
  for (const auto& p : found) {
    text.append(t.pattern, pos, p.begin - pos);
    if (t.candidate_slot && p.name == *t.candidate_slot) {
      text += *candidate;
    } else if (t.contrast_slot && p.name == *t.contrast_slot) {
      if (!contrast) throw RenderError("missing contrast value for '" + p.name + "'", p.name);
      text += *contrast;
    } else {
      auto it = example.find(p.name);
      if (it == example.end()) throw RenderError("missing field value '" + p.name + "'", p.name);
      text += it->second;
    }
    pos = p.end;
  }
  text.append(t.pattern, pos, std::string::npos);

  RenderedStatement out;
  out.text = std::move(text);
  out.template_id = t.template_id;
  out.candidate = candidate ? candidate : t.asserted_label;
  out.language = language.empty() ? t.language_tag : std::string(language);
  return out;
}

// ---------------------------------------------------------------------------
// Candidates

namespace {

const std::string& field_or_throw(const TaskSchema& schema, const FieldMap& example, const std::string& name) {
  auto it = example.find(name);
  if (it == example.end()) {
    throw InvalidInputError("task '" + schema.task_id + "': example lacks field '" + name + "'");
  }
  return it->second;
}

void push_unique(std::vector<std::string>& out, const std::string& v) {
  if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
}

}  // namespace

std::vector<std::string> enumerate_candidates(const TaskSchema& schema, const FieldMap& example) {
  const auto& ls = schema.label_space;
  std::vector<std::string> out;
  switch (ls.kind) {
    case LabelSpace::Kind::fixed:
      for (const auto& l : ls.labels) push_unique(out, l);
      break;
    case LabelSpace::Kind::choice_columns:
      for (const auto& col : ls.columns) {
        auto it = example.find(col);
        if (it != example.end()) push_unique(out, it->second);
      }
      break;
    case LabelSpace::Kind::gold_plus_distractors:
      push_unique(out, field_or_throw(schema, example, ls.gold_field));
      for (const auto& col : ls.columns) {
        auto it = example.find(col);
        if (it != example.end() && !it->second.empty()) push_unique(out, it->second);
      }
      break;
  }
  if (out.empty()) throw DegenerateTaskError("task '" + schema.task_id + "' has an empty candidate set");
  return out;
}

std::string gold_value(const TaskSchema& schema, const FieldMap& example) {
  const auto& ls = schema.label_space;
  const auto& raw = field_or_throw(schema, example, ls.gold_field);
  switch (ls.kind) {
    case LabelSpace::Kind::fixed:
      if (std::find(ls.labels.begin(), ls.labels.end(), raw) == ls.labels.end()) {
        throw InvalidInputError("task '" + schema.task_id + "': gold label '" + raw + "' not in label list");
      }
      return raw;
    case LabelSpace::Kind::choice_columns: {
      std::size_t index = ls.columns.size();
      auto named = std::find(ls.columns.begin(), ls.columns.end(), raw);
      if (named != ls.columns.end()) {
        index = static_cast<std::size_t>(named - ls.columns.begin());
      } else {
        std::size_t parsed = 0;
        auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), parsed);
        if (ec == std::errc() && ptr == raw.data() + raw.size()) index = parsed;
      }
      if (index >= ls.columns.size()) {
        throw InvalidInputError("task '" + schema.task_id + "': gold index '" + raw + "' out of range");
      }
      return field_or_throw(schema, example, ls.columns[index]);
    }
    case LabelSpace::Kind::gold_plus_distractors:
      return raw;
  }
  return raw;
}

}  // namespace stmt

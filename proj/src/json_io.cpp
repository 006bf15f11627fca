#include "stmt/json_io.hpp"

#include <algorithm>

#include "stmt/error.hpp"

namespace stmt {

using nlohmann::json;

namespace {

std::string_view kind_name(LabelSpace::Kind k) {
  switch (k) {
    case LabelSpace::Kind::fixed: return "fixed";
    case LabelSpace::Kind::choice_columns: return "choice_columns";
    case LabelSpace::Kind::gold_plus_distractors: return "gold_plus_distractors";
  }
  return "fixed";
}

LabelSpace::Kind parse_kind(const std::string& s) {
  if (s == "fixed") return LabelSpace::Kind::fixed;
  if (s == "choice_columns") return LabelSpace::Kind::choice_columns;
  if (s == "gold_plus_distractors") return LabelSpace::Kind::gold_plus_distractors;
  throw InvalidSpecError("unknown label space kind '" + s + "'");
}

}  // namespace

std::vector<std::string> unknown_keys(const json& j, std::initializer_list<std::string_view> allowed) {
  std::vector<std::string> out;
  if (!j.is_object()) return out;
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) out.push_back(key);
  }
  return out;
}

void to_json(json& j, const LabelSpace& ls) {
  j = json::object();
  j["kind"] = kind_name(ls.kind);
  if (!ls.labels.empty()) j["labels"] = ls.labels;
  if (!ls.columns.empty()) j["columns"] = ls.columns;
  j["gold_field"] = ls.gold_field;
  if (ls.positive_label) j["positive_label"] = *ls.positive_label;
  if (ls.pool_distractors) j["pool_distractors"] = true;
}

void from_json(const json& j, LabelSpace& ls) {
  if (auto bad = unknown_keys(j, {"kind", "labels", "columns", "gold_field", "positive_label", "pool_distractors"});
      !bad.empty()) {
    throw InvalidSpecError("label space: unknown key '" + bad.front() + "'");
  }
  ls.kind = parse_kind(j.at("kind").get<std::string>());
  ls.labels = j.value("labels", std::vector<std::string>{});
  ls.columns = j.value("columns", std::vector<std::string>{});
  ls.gold_field = j.at("gold_field").get<std::string>();
  if (j.contains("positive_label") && !j["positive_label"].is_null()) {
    ls.positive_label = j["positive_label"].get<std::string>();
  }
  ls.pool_distractors = j.value("pool_distractors", false);
}

void to_json(json& j, const TaskSchema& s) {
  j = json::object();
  j["task_id"] = s.task_id;
  j["field_names"] = s.field_names;
  j["label_space"] = s.label_space;
  j["languages"] = s.languages;
  if (s.is_translation) j["is_translation"] = true;
}

void from_json(const json& j, TaskSchema& s) {
  if (auto bad = unknown_keys(j, {"task_id", "field_names", "label_space", "languages", "is_translation"});
      !bad.empty()) {
    throw InvalidSpecError("task schema: unknown key '" + bad.front() + "'");
  }
  s.task_id = j.at("task_id").get<std::string>();
  s.field_names = j.at("field_names").get<std::vector<std::string>>();
  s.label_space = j.at("label_space").get<LabelSpace>();
  s.languages = j.value("languages", std::vector<std::string>{});
  s.is_translation = j.value("is_translation", false);
}

void to_json(json& j, const StatementTemplate& t) {
  j = json::object();
  j["template_id"] = t.template_id;
  j["task_id"] = t.task_id;
  j["language_tag"] = t.language_tag;
  j["polarity"] = to_string(t.polarity);
  j["candidate_slot"] = t.candidate_slot ? json(*t.candidate_slot) : json(nullptr);
  j["pattern"] = t.pattern;
  if (t.contrast_slot) j["contrast_slot"] = *t.contrast_slot;
  if (t.asserted_label) j["asserted_label"] = *t.asserted_label;
  if (t.translates) j["translates"] = *t.translates;
  if (t.suspect_heading) j["suspect_heading"] = true;
}

}  // namespace stmt

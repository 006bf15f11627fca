#include "stmt/statement_builder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <set>
#include <sstream>
#include <unordered_map>

#include "stmt/digest.hpp"
#include "stmt/error.hpp"
#include "stmt/json_io.hpp"
#include "stmt/rng.hpp"

#ifndef STMT_SOURCE_DIR
#define STMT_SOURCE_DIR "."
#endif

namespace stmt {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string>& paper_datasets() {
  static const std::vector<std::string> ids = {
      "belebele", "exams",  "xquad",  "wikilingua", "flores101", "multilingual_sentiments", "xlwic",
      "massive",  "figqa",  "xcsqa",  "xcodah",     "sib200",    "pawsx"};
  return ids;
}

bool in_table(std::string_view code) { return find_language(code).has_value(); }

std::string_view mode_name(TemplateLanguageMode m) {
  return m == TemplateLanguageMode::translated ? "translated" : "english_only";
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

// Languages an entry expands to, in language-code order.
std::vector<std::string> entry_languages(const MixtureEntry& e, const TaskSchema& schema,
                                         const std::vector<std::string>& language_set) {
  std::set<std::string> out;
  if (e.languages.empty()) {
    for (const auto& l : schema.languages) {
      if (std::find(language_set.begin(), language_set.end(), l) != language_set.end()) out.insert(l);
    }
  } else {
    out.insert(e.languages.begin(), e.languages.end());
  }
  return {out.begin(), out.end()};
}

std::string entry_task(const MixtureEntry& e) { return e.task_id.empty() ? e.dataset_id : e.task_id; }

std::optional<std::string> positive_of(const TaskSchema& schema) {
  if (schema.label_space.positive_label) return schema.label_space.positive_label;
  if (schema.label_space.kind == LabelSpace::Kind::fixed && !schema.label_space.labels.empty()) {
    return schema.label_space.labels.front();
  }
  return std::nullopt;
}

}  // namespace

std::vector<std::string> MixtureSpec::language_set() const {
  std::vector<std::string> out = language_preset ? preset_languages(*language_preset) : explicit_languages;
  for (const auto& l : extra_languages) {
    if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
  }
  return out;
}

std::vector<MixtureEntry> paper_mixture_entries(const fs::path& corpora_dir) {
  std::vector<MixtureEntry> out;
  for (const auto& id : paper_datasets()) {
    out.push_back({id, id, {}, corpora_dir / (id + ".manifest.json")});
  }
  return out;
}

MixtureSpec mixture_spec_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw InvalidSpecError("mixture spec must be a JSON object");
  if (auto bad = unknown_keys(j, {"entries", "corpora_dir", "rows_per_language_cap", "per_truth_quota",
                                  "target_total", "include_mt", "template_language_mode", "languages_mode",
                                  "extra_languages", "seed", "validation_fraction", "template_pack",
                                  "translated_packs", "task_catalog"});
      !bad.empty()) {
    throw InvalidSpecError("mixture spec: unknown key '" + bad.front() + "'");
  }
  MixtureSpec s;
  s.base_dir = base_dir;
  try {
    if (j.contains("entries")) {
      const auto& e = j["entries"];
      if (e.is_string()) {
        if (e.get<std::string>() != "paper_mixture") {
          throw InvalidSpecError("mixture spec: entries must be a list or \"paper_mixture\"");
        }
        s.entries = paper_mixture_entries(j.value("corpora_dir", std::string("corpora")));
      } else {
        for (const auto& item : e) {
          if (auto bad = unknown_keys(item, {"dataset_id", "task_id", "languages", "manifest"}); !bad.empty()) {
            throw InvalidSpecError("mixture entry: unknown key '" + bad.front() + "'");
          }
          MixtureEntry me;
          me.dataset_id = item.at("dataset_id").get<std::string>();
          me.task_id = item.value("task_id", me.dataset_id);
          me.languages = item.value("languages", std::vector<std::string>{});
          if (item.contains("manifest")) {
            me.manifest = item["manifest"].get<std::string>();
          } else {
            me.manifest = fs::path(j.value("corpora_dir", std::string("corpora"))) / (me.dataset_id + ".manifest.json");
          }
          s.entries.push_back(std::move(me));
        }
      }
    }
    s.rows_per_language_cap = j.value("rows_per_language_cap", s.rows_per_language_cap);
    s.per_truth_quota = j.value("per_truth_quota", s.per_truth_quota);
    if (j.contains("target_total") && !j["target_total"].is_null()) {
      s.target_total = j["target_total"].get<std::int64_t>();
    }
    s.include_mt = j.value("include_mt", s.include_mt);
    const std::string mode = j.value("template_language_mode", std::string("english_only"));
    if (mode == "english_only") {
      s.template_language_mode = TemplateLanguageMode::english_only;
    } else if (mode == "translated") {
      s.template_language_mode = TemplateLanguageMode::translated;
    } else {
      throw InvalidSpecError("unknown template_language_mode '" + mode + "'");
    }
    if (j.contains("languages_mode")) {
      const auto& lm = j["languages_mode"];
      if (lm.is_string()) {
        auto p = parse_language_preset(lm.get<std::string>());
        if (!p) throw InvalidSpecError("unknown language preset '" + lm.get<std::string>() + "'");
        s.language_preset = *p;
      } else {
        s.language_preset.reset();
        s.explicit_languages = lm.get<std::vector<std::string>>();
      }
    }
    s.extra_languages = j.value("extra_languages", std::vector<std::string>{});
    s.seed = j.value("seed", std::uint64_t{0});
    s.validation_fraction = j.value("validation_fraction", s.validation_fraction);
    if (j.contains("template_pack")) s.template_pack = j["template_pack"].get<std::string>();
    for (const auto& p : j.value("translated_packs", std::vector<std::string>{})) s.translated_packs.emplace_back(p);
    if (j.contains("task_catalog")) s.task_catalog = j["task_catalog"].get<std::string>();
  } catch (const json::exception& e) {
    throw InvalidSpecError(std::string("mixture spec: ") + e.what());
  }
  return s;
}

MixtureSpec load_mixture_spec(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw InvalidSpecError("mixture spec '" + path.string() + "': " + e.what());
  }
  return mixture_spec_from_json(j, path.parent_path());
}

json to_json(const MixtureSpec& s) {
  json j = json::object();
  json entries = json::array();
  for (const auto& e : s.entries) {
    entries.push_back({{"dataset_id", e.dataset_id},
                       {"task_id", entry_task(e)},
                       {"languages", e.languages},
                       {"manifest", e.manifest.generic_string()}});
  }
  j["entries"] = std::move(entries);
  j["rows_per_language_cap"] = s.rows_per_language_cap;
  j["per_truth_quota"] = s.per_truth_quota;
  j["target_total"] = s.target_total ? json(*s.target_total) : json(nullptr);
  j["include_mt"] = s.include_mt;
  j["template_language_mode"] = mode_name(s.template_language_mode);
  if (s.language_preset) {
    j["languages_mode"] = to_string(*s.language_preset);
  } else {
    j["languages_mode"] = s.explicit_languages;
  }
  j["extra_languages"] = s.extra_languages;
  j["seed"] = s.seed;
  j["validation_fraction"] = s.validation_fraction;
  j["template_pack"] = s.template_pack.generic_string();
  json packs = json::array();
  for (const auto& p : s.translated_packs) packs.push_back(p.generic_string());
  j["translated_packs"] = std::move(packs);
  j["task_catalog"] = s.task_catalog.generic_string();
  return j;
}

std::string spec_digest(const MixtureSpec& spec) { return sha256_hex(to_json(spec).dump()); }

void validate_mixture_spec(const MixtureSpec& spec, const TaskCatalog& catalog) {
  if (spec.rows_per_language_cap < 0) throw InvalidSpecError("rows_per_language_cap must be >= 0");
  if (spec.per_truth_quota < 0) throw InvalidSpecError("per_truth_quota must be >= 0");
  if (spec.target_total && *spec.target_total < 0) throw InvalidSpecError("target_total must be >= 0");
  if (!(spec.validation_fraction >= 0.0 && spec.validation_fraction < 1.0)) {
    throw InvalidSpecError("validation_fraction must lie in [0, 1)");
  }
  const auto langs = spec.language_set();
  const bool implicit_sw = spec.language_preset == LanguagePreset::langs11;
  auto known = [&](const std::string& code) {
    return in_table(code) ||
           std::find(spec.extra_languages.begin(), spec.extra_languages.end(), code) != spec.extra_languages.end() ||
           (implicit_sw && code == "sw");
  };
  for (const auto& l : langs) {
    if (!known(l)) throw InvalidSpecError("language '" + l + "' is neither in the language table nor registered");
  }
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& e : spec.entries) {
    if (e.dataset_id.empty()) throw InvalidSpecError("mixture entry without dataset_id");
    const auto& schema = catalog.get(entry_task(e));
    for (const auto& l : e.languages) {
      if (std::find(langs.begin(), langs.end(), l) == langs.end()) {
        throw InvalidSpecError("entry '" + e.dataset_id + "': language '" + l + "' is outside the spec language set");
      }
    }
    for (const auto& l : entry_languages(e, schema, langs)) {
      if (!seen.emplace(e.dataset_id, l).second) {
        throw InvalidSpecError("duplicate group (" + e.dataset_id + ", " + l + ")");
      }
    }
  }
}

std::string_view to_string(Split s) { return s == Split::train ? "train" : "validation"; }

std::vector<const StatementRecord*> StatementDataset::split(Split s) const {
  std::vector<const StatementRecord*> out;
  for (const auto& r : records) {
    if (r.split == s) out.push_back(&r);
  }
  return out;
}

json BuildReport::to_json() const {
  json j = json::object();
  json gs = json::array();
  for (const auto& g : groups) {
    gs.push_back({{"dataset_id", g.dataset_id},
                  {"task_id", g.task_id},
                  {"language", g.language},
                  {"rows_available", g.rows_available},
                  {"rows_sampled", g.rows_sampled},
                  {"distinct_rows_used", g.distinct_rows_used},
                  {"statements", g.statements},
                  {"true", g.true_count},
                  {"false", g.false_count},
                  {"validation", g.validation_count},
                  {"template_fallback", g.template_fallback}});
  }
  j["groups"] = std::move(gs);
  j["total"] = total;
  j["true_total"] = true_total;
  j["false_total"] = false_total;
  j["seed"] = seed;
  j["spec_digest"] = spec_digest;
  j["per_truth_quota"] = per_truth_quota;
  j["notes"] = notes;
  return j;
}

std::vector<CorpusRow> sample_rows(std::span<const CorpusRow> corpus, std::string_view language, std::int64_t cap,
                                   std::uint64_t seed) {
  if (cap < 0) throw InvalidSpecError("rows_per_language_cap must be >= 0");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].language == language) idx.push_back(i);
  }
  const auto k = static_cast<std::size_t>(cap);
  if (idx.size() > k) {
    // Partial Fisher-Yates: the first k positions are a uniform k-subset.
    Rng rng(seed);
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
  }
  std::vector<CorpusRow> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(corpus[i]);
  return out;
}

bool truth_label(Polarity polarity, const std::optional<std::string>& candidate, const std::string& gold,
                 std::string_view positive_label) {
  const bool match = candidate ? *candidate == gold : gold == positive_label;
  return polarity == Polarity::affirmative ? match : !match;
}

namespace {

struct RowInfo {
  std::string gold;
  std::vector<std::string> wrong;  // local wrong candidates, in enumeration order
  bool has_wrong = false;
};

enum class TemplateKind { slot, asserted, pair };

struct Generator {
  std::span<const CorpusRow> rows;
  const GroupJob& job;
  const TaskSchema& schema;
  std::optional<std::string> positive;
  std::vector<RowInfo> info;
  std::vector<std::string> pool;  // distinct golds of the group, first-appearance order
  std::unordered_map<std::string, std::size_t> pool_index;
  std::vector<TemplateKind> kinds;
  Rng rng;

  Generator(std::span<const CorpusRow> r, const GroupJob& j)
      : rows(r), job(j), schema(*j.schema), positive(positive_of(*j.schema)), rng(j.seed) {
    info.reserve(rows.size());
    for (const auto& row : rows) {
      RowInfo ri;
      try {
        ri.gold = gold_value(schema, row.fields);
        for (auto& c : enumerate_candidates(schema, row.fields)) {
          if (c != ri.gold) ri.wrong.push_back(std::move(c));
        }
      } catch (const Error& e) {
        throw InvalidInputError("dataset '" + job.dataset_id + "' row '" + row.row_id + "': " + e.what());
      }
      if (pool_index.emplace(ri.gold, pool.size()).second) pool.push_back(ri.gold);
      info.push_back(std::move(ri));
    }
    for (auto& ri : info) {
      ri.has_wrong = !ri.wrong.empty() || (schema.label_space.pool_distractors && pool.size() > 1);
    }
    for (const auto* t : job.templates) {
      if (t->candidate_slot) {
        kinds.push_back(TemplateKind::slot);
      } else if (t->asserted_label) {
        kinds.push_back(TemplateKind::asserted);
      } else {
        kinds.push_back(TemplateKind::pair);
      }
    }
  }

  bool feasible(std::size_t row, std::size_t t, bool truth) const {
    const auto* tpl = job.templates[t];
    const auto& ri = info[row];
    switch (kinds[t]) {
      case TemplateKind::slot: {
        const bool use_gold = (tpl->polarity == Polarity::affirmative) == truth;
        if (tpl->contrast_slot) return ri.has_wrong;
        return use_gold || ri.has_wrong;
      }
      case TemplateKind::asserted:
        return truth_label(tpl->polarity, tpl->asserted_label, ri.gold) == truth;
      case TemplateKind::pair:
        return positive && truth_label(tpl->polarity, std::nullopt, ri.gold, *positive) == truth;
    }
    return false;
  }

  std::string draw_wrong(std::size_t row) {
    const auto& ri = info[row];
    if (!ri.wrong.empty()) return ri.wrong[rng.below(ri.wrong.size())];
    const std::size_t g = pool_index.at(ri.gold);
    std::size_t k = static_cast<std::size_t>(rng.below(pool.size() - 1));
    if (k >= g) ++k;
    return pool[k];
  }

  std::vector<StatementRecord> run() {
    std::vector<StatementRecord> out;
    const auto q = static_cast<std::size_t>(std::max<std::int64_t>(job.per_truth_quota, 0));
    if (q == 0 || rows.empty()) return out;
    if (job.templates.empty()) {
      throw CannotFalsifyError(schema.task_id, "no templates available for language '" + job.language + "'");
    }

    // Per truth value: rows for which at least one template can produce it.
    std::vector<std::size_t> ok[2];
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (int tv = 0; tv < 2; ++tv) {
        for (std::size_t t = 0; t < kinds.size(); ++t) {
          if (feasible(r, t, tv == 1)) {
            ok[tv].push_back(r);
            break;
          }
        }
      }
    }
    if (ok[0].empty()) {
      throw CannotFalsifyError(schema.task_id, "no row/template combination yields a false statement");
    }
    if (ok[1].empty()) {
      throw CannotFalsifyError(schema.task_id, "no row/template combination yields a true statement");
    }

    // Gold-class buckets for the round-robin over fixed label lists.
    std::vector<std::vector<std::size_t>> classes;
    if (schema.label_space.kind == LabelSpace::Kind::fixed) {
      for (const auto& label : schema.label_space.labels) {
        std::vector<std::size_t> bucket;
        for (auto r : ok[1]) {
          if (info[r].gold == label) bucket.push_back(r);
        }
        if (!bucket.empty()) classes.push_back(std::move(bucket));
      }
    }

    out.reserve(2 * q);
    std::vector<std::size_t> eligible;
    for (std::size_t k = 0; k < 2 * q; ++k) {
      const bool truth = k % 2 == 0;
      const std::size_t n = k / 2;
      const std::vector<std::size_t>& bucket =
          truth && !classes.empty() ? classes[n % classes.size()] : ok[truth ? 1 : 0];
      const std::size_t row = bucket[rng.below(bucket.size())];
      eligible.clear();
      for (std::size_t t = 0; t < kinds.size(); ++t) {
        if (feasible(row, t, truth)) eligible.push_back(t);
      }
      const std::size_t t = eligible[rng.below(eligible.size())];
      out.push_back(emit(row, t, truth));
    }
    return out;
  }

  StatementRecord emit(std::size_t row, std::size_t t, bool truth) {
    const auto& tpl = *job.templates[t];
    const auto& ri = info[row];
    std::optional<std::string> candidate;
    std::optional<std::string> contrast;
    if (kinds[t] == TemplateKind::slot) {
      const bool use_gold = (tpl.polarity == Polarity::affirmative) == truth;
      candidate = use_gold ? ri.gold : draw_wrong(row);
      if (tpl.contrast_slot) contrast = use_gold ? draw_wrong(row) : ri.gold;
    }
    RenderedStatement rs;
    try {
      rs = render(tpl, rows[row].fields, candidate, contrast, job.language);
    } catch (const RenderError& e) {
      throw InvalidInputError("dataset '" + job.dataset_id + "' row '" + rows[row].row_id + "': " + e.what());
    }
    StatementRecord rec;
    rec.statement = std::move(rs.text);
    rec.truth = truth;
    rec.task_id = schema.task_id;
    rec.dataset_id = job.dataset_id;
    rec.language = job.language;
    rec.template_id = tpl.template_id;
    rec.polarity = tpl.polarity;
    rec.candidate = kinds[t] == TemplateKind::asserted ? tpl.asserted_label : candidate;
    rec.gold = ri.gold;
    rec.source_row_id = rows[row].row_id;
    rec.split = Split::train;
    return rec;
  }
};

}  // namespace

std::vector<StatementRecord> generate_statements(std::span<const CorpusRow> rows, const GroupJob& job) {
  if (!job.schema) throw InvalidSpecError("generate_statements: missing task schema");
  Generator g(rows, job);
  return g.run();
}

std::vector<GroupPlan> plan_mixture(const MixtureSpec& spec, const TaskCatalog& catalog,
                                    const std::map<std::pair<std::string, std::string>, std::size_t>& row_counts,
                                    std::vector<std::string>* notes) {
  validate_mixture_spec(spec, catalog);
  const auto langs = spec.language_set();
  std::vector<GroupPlan> plan;
  for (std::size_t i = 0; i < spec.entries.size(); ++i) {
    const auto& e = spec.entries[i];
    const auto& schema = catalog.get(entry_task(e));
    if (schema.is_translation && !spec.include_mt) {
      if (notes) notes->push_back("dataset '" + e.dataset_id + "' dropped: machine-translation data excluded");
      continue;
    }
    for (const auto& l : entry_languages(e, schema, langs)) {
      auto it = row_counts.find({e.dataset_id, l});
      if (it == row_counts.end() || it->second == 0) {
        if (notes) notes->push_back("group (" + e.dataset_id + ", " + l + ") has no rows; skipped");
        continue;
      }
      plan.push_back({i, e.dataset_id, schema.task_id, l, spec.per_truth_quota});
    }
  }
  if (spec.target_total && !plan.empty()) {
    const double q = static_cast<double>(*spec.target_total) / (2.0 * static_cast<double>(plan.size()));
    const auto quota = static_cast<std::int64_t>(std::llround(q));
    for (auto& g : plan) g.per_truth_quota = quota;
  }
  return plan;
}

std::pair<StatementDataset, BuildReport> assemble_mixture(const MixtureSpec& spec,
                                                          const std::map<std::string, Corpus>& corpora,
                                                          const TemplateRegistry& registry,
                                                          const TaskCatalog& catalog) {
  StatementDataset ds;
  BuildReport report;
  const std::string digest = spec_digest(spec);
  ds.header.spec_digest = digest;
  ds.header.seed = spec.seed;
  ds.header.created_utc = reproducible_timestamp();
  report.seed = spec.seed;
  report.spec_digest = digest;
  report.per_truth_quota = spec.per_truth_quota;

  const auto langs = spec.language_set();
  if (std::find(langs.begin(), langs.end(), "sw") != langs.end() && !in_table("sw")) {
    report.notes.push_back(
        "sw (Swahili) belongs to the 11-language subset but is absent from the 25-language table; "
        "registered implicitly");
  }

  std::map<std::pair<std::string, std::string>, std::size_t> counts;
  for (const auto& [id, corpus] : corpora) {
    for (const auto& row : corpus.rows) ++counts[{id, row.language}];
  }
  const auto plan = plan_mixture(spec, catalog, counts, &report.notes);
  if (!plan.empty()) report.per_truth_quota = plan.front().per_truth_quota;

  // Template lists per group, resolved up front so the parallel part only reads.
  std::vector<GroupJob> jobs(plan.size());
  std::vector<bool> fallback(plan.size(), false);
  for (std::size_t g = 0; g < plan.size(); ++g) {
    const auto& p = plan[g];
    const auto& schema = catalog.get(p.task_id);
    auto& job = jobs[g];
    job.dataset_id = p.dataset_id;
    job.language = p.language;
    job.schema = &schema;
    job.per_truth_quota = p.per_truth_quota;
    job.seed = derive_seed(spec.seed, "generate", p.dataset_id, p.language);
    if (spec.template_language_mode == TemplateLanguageMode::translated) {
      job.templates = registry.for_task(p.task_id, p.language);
      if (job.templates.empty()) {
        fallback[g] = true;
        report.notes.push_back("no translated templates for (" + p.task_id + ", " + p.language +
                               "); using English templates");
      }
    }
    if (job.templates.empty()) job.templates = registry.for_task(p.task_id, "en");
    for (const auto* t : job.templates) {
      auto v = validate_template(*t, schema);
      if (!v.empty()) throw InvalidSpecError("template '" + t->template_id + "': " + v.front().message());
    }
  }

  std::vector<std::vector<StatementRecord>> outputs(plan.size());
  std::vector<GroupReport> group_reports(plan.size());
  std::vector<std::exception_ptr> errors(plan.size());
  const auto n_groups = static_cast<std::int64_t>(plan.size());

#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t gi = 0; gi < n_groups; ++gi) {
    const auto g = static_cast<std::size_t>(gi);
    try {
      const auto& p = plan[g];
      const auto& corpus = corpora.at(p.dataset_id);
      auto rows = sample_rows(corpus.rows, p.language, spec.rows_per_language_cap,
                              derive_seed(spec.seed, "sample", p.dataset_id, p.language));
      auto recs = generate_statements(rows, jobs[g]);

      // Stratified validation split per truth value.
      std::vector<std::size_t> by_truth[2];
      for (std::size_t i = 0; i < recs.size(); ++i) by_truth[recs[i].truth ? 1 : 0].push_back(i);
      std::size_t n_val_total = 0;
      for (int tv = 0; tv < 2; ++tv) {
        auto& idx = by_truth[tv];
        Rng rng(derive_seed(spec.seed, "split", p.dataset_id, p.language, tv ? "true" : "false"));
        rng.shuffle(idx);
        const auto n_val =
            static_cast<std::size_t>(std::floor(static_cast<double>(idx.size()) * spec.validation_fraction + 0.5));
        for (std::size_t i = 0; i < n_val && i < idx.size(); ++i) recs[idx[i]].split = Split::validation;
        n_val_total += std::min(n_val, idx.size());
      }

      auto& gr = group_reports[g];
      gr.dataset_id = p.dataset_id;
      gr.task_id = p.task_id;
      gr.language = p.language;
      gr.rows_available = counts.at({p.dataset_id, p.language});
      gr.rows_sampled = rows.size();
      std::set<std::string> used;
      for (const auto& r : recs) {
        used.insert(r.source_row_id);
        (r.truth ? gr.true_count : gr.false_count)++;
      }
      gr.distinct_rows_used = used.size();
      gr.statements = recs.size();
      gr.validation_count = n_val_total;
      gr.template_fallback = fallback[g];
      outputs[g] = std::move(recs);
    } catch (...) {
      errors[g] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::size_t total = 0;
  for (const auto& o : outputs) total += o.size();
  ds.records.reserve(total);
  for (std::size_t g = 0; g < plan.size(); ++g) {
    for (auto& r : outputs[g]) ds.records.push_back(std::move(r));
    const auto& gr = group_reports[g];
    report.total += gr.statements;
    report.true_total += gr.true_count;
    report.false_total += gr.false_count;
    report.groups.push_back(gr);
  }
  Rng shuffle_rng(derive_seed(spec.seed, "shuffle"));
  shuffle_rng.shuffle(ds.records);
  return {std::move(ds), std::move(report)};
}

fs::path default_template_pack() {
  if (const char* env = std::getenv("STMT_PACK"); env && *env) return env;
  return fs::path(STMT_SOURCE_DIR) / "packs" / "appendix_a.json";
}

std::pair<StatementDataset, BuildReport> build_from_spec(const MixtureSpec& spec) {
  TaskCatalog catalog = TaskCatalog::builtin();
  if (!spec.task_catalog.empty()) catalog.merge(TaskCatalog::load(resolve(spec.base_dir, spec.task_catalog)));
  validate_mixture_spec(spec, catalog);

  const fs::path pack = spec.template_pack.empty() ? default_template_pack() : resolve(spec.base_dir, spec.template_pack);
  TemplateRegistry registry = load_template_pack(pack, catalog);
  for (const auto& p : spec.translated_packs) registry.merge(load_template_pack(resolve(spec.base_dir, p), catalog));

  std::map<std::string, Corpus> corpora;
  for (const auto& e : spec.entries) {
    if (corpora.count(e.dataset_id)) continue;
    if (!spec.include_mt && catalog.get(entry_task(e)).is_translation) continue;
    const fs::path manifest = resolve(spec.base_dir, e.manifest);
    if (!fs::exists(manifest)) {
      throw LoadError("dataset '" + e.dataset_id + "': manifest not found: " + manifest.string());
    }
    corpora.emplace(e.dataset_id, load_corpus(manifest));
  }
  return assemble_mixture(spec, corpora, registry, catalog);
}

std::string reproducible_timestamp() {
  std::time_t t = 0;
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH"); env && *env) {
    char* end = nullptr;
    const long long v = std::strtoll(env, &end, 10);
    if (end && *end == '\0' && v >= 0) t = static_cast<std::time_t>(v);
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

ordered_json record_json(const StatementRecord& r) {
  ordered_json j;
  j["statement"] = r.statement;
  j["truth"] = r.truth;
  j["task_id"] = r.task_id;
  j["dataset_id"] = r.dataset_id;
  j["language"] = r.language;
  j["template_id"] = r.template_id;
  j["polarity"] = to_string(r.polarity);
  j["candidate"] = r.candidate ? ordered_json(*r.candidate) : ordered_json(nullptr);
  j["gold"] = r.gold;
  j["source_row_id"] = r.source_row_id;
  j["split"] = to_string(r.split);
  return j;
}

StatementRecord parse_record(const json& j, std::size_t line) {
  static const std::vector<std::string> keys = {"statement", "truth",  "task_id",       "dataset_id",
                                                "language",  "template_id", "polarity", "candidate",
                                                "gold",      "source_row_id", "split"};
  if (!j.is_object()) throw ReadError("record is not a JSON object", line);
  if (j.size() != keys.size()) throw ReadError("record has " + std::to_string(j.size()) + " keys, expected 11", line);
  for (const auto& k : keys) {
    if (!j.contains(k)) throw ReadError("record lacks key '" + k + "'", line);
  }
  StatementRecord r;
  try {
    r.statement = j["statement"].get<std::string>();
    r.truth = j["truth"].get<bool>();
    r.task_id = j["task_id"].get<std::string>();
    r.dataset_id = j["dataset_id"].get<std::string>();
    r.language = j["language"].get<std::string>();
    r.template_id = j["template_id"].get<std::string>();
    auto pol = parse_polarity(j["polarity"].get<std::string>());
    if (!pol) throw ReadError("bad polarity", line);
    r.polarity = *pol;
    if (!j["candidate"].is_null()) r.candidate = j["candidate"].get<std::string>();
    r.gold = j["gold"].get<std::string>();
    r.source_row_id = j["source_row_id"].get<std::string>();
    const auto split = j["split"].get<std::string>();
    if (split == "train") {
      r.split = Split::train;
    } else if (split == "validation") {
      r.split = Split::validation;
    } else {
      throw ReadError("bad split '" + split + "'", line);
    }
  } catch (const json::exception& e) {
    throw ReadError(e.what(), line);
  }
  return r;
}

}  // namespace

std::string serialize_dataset(const StatementDataset& d) {
  ordered_json h;
  h["format_version"] = d.header.format_version;
  h["spec_digest"] = d.header.spec_digest;
  h["seed"] = d.header.seed;
  h["created_utc"] = d.header.created_utc;
  std::string out = h.dump() + "\n";
  for (const auto& r : d.records) out += record_json(r).dump() + "\n";
  return out;
}

void write_dataset(const StatementDataset& d, const fs::path& path) { write_file(path, serialize_dataset(d)); }

StatementDataset parse_dataset(std::string_view text) {
  StatementDataset d;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ReadError(std::string("corrupt line: ") + e.what(), line_no);
    }
    if (!header_seen) {
      if (!j.is_object() || !j.contains("format_version")) throw ReadError("missing dataset header", line_no);
      try {
        d.header.format_version = j.at("format_version").get<int>();
        d.header.spec_digest = j.value("spec_digest", std::string());
        d.header.seed = j.value("seed", std::uint64_t{0});
        d.header.created_utc = j.value("created_utc", std::string());
      } catch (const json::exception& e) {
        throw ReadError(e.what(), line_no);
      }
      if (d.header.format_version != 1) {
        throw ReadError("unsupported format_version " + std::to_string(d.header.format_version), line_no);
      }
      header_seen = true;
      continue;
    }
    d.records.push_back(parse_record(j, line_no));
  }
  if (!header_seen) throw ReadError("missing dataset header", 1);
  return d;
}

StatementDataset read_dataset(const fs::path& path) {
  if (!fs::exists(path)) throw LoadError("dataset file not found: " + path.string());
  return parse_dataset(read_file(path));
}

}  // namespace stmt

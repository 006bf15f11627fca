#include "stmt/eval_harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "stmt/digest.hpp"
#include "stmt/error.hpp"
#include "stmt/json_io.hpp"
#include "stmt/statement_builder.hpp"

namespace stmt {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

// ---------------------------------------------------------------------------
// Manifest

EvalManifest eval_manifest_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw InvalidConfigError("eval manifest must be a JSON object");
  if (auto bad = unknown_keys(j, {"tasks", "seen_languages", "aggregation", "include_negated", "max_statement_batch",
                                  "template_pack", "task_catalog"});
      !bad.empty()) {
    throw InvalidConfigError("eval manifest: unknown key '" + bad.front() + "'");
  }
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base_dir / p; };
  EvalManifest m;
  try {
    for (const auto& t : j.at("tasks")) {
      if (auto bad = unknown_keys(t, {"task_id", "manifest", "languages", "template_ids", "template_language"});
          !bad.empty()) {
        throw InvalidConfigError("eval manifest task: unknown key '" + bad.front() + "'");
      }
      EvalTaskSpec s;
      s.task_id = t.at("task_id").get<std::string>();
      s.manifest = resolve(t.at("manifest").get<std::string>());
      s.languages = t.value("languages", std::vector<std::string>{});
      s.template_ids = t.value("template_ids", std::vector<std::string>{});
      s.template_language = t.value("template_language", std::string("en"));
      m.tasks.push_back(std::move(s));
    }
    for (const auto& l : j.value("seen_languages", std::vector<std::string>{})) m.seen_languages.insert(l);
    m.options.aggregation = parse_aggregation(j.value("aggregation", std::string("mean")));
    m.options.include_negated = j.value("include_negated", false);
    m.options.max_statement_batch = j.value("max_statement_batch", std::size_t{256});
    if (j.contains("template_pack")) m.template_pack = resolve(j["template_pack"].get<std::string>());
    if (j.contains("task_catalog")) m.task_catalog = resolve(j["task_catalog"].get<std::string>());
  } catch (const json::exception& e) {
    throw InvalidConfigError(std::string("eval manifest: ") + e.what());
  }
  if (m.tasks.empty()) throw InvalidConfigError("eval manifest lists no tasks");
  if (m.options.max_statement_batch == 0) throw InvalidConfigError("max_statement_batch must be >= 1");
  return m;
}

EvalManifest load_eval_manifest(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw InvalidConfigError("eval manifest '" + path.string() + "': " + e.what());
  }
  return eval_manifest_from_json(j, path.parent_path());
}

json to_json(const EvalManifest& m) {
  json tasks = json::array();
  for (const auto& t : m.tasks) {
    tasks.push_back({{"task_id", t.task_id},
                     {"manifest", t.manifest.string()},
                     {"languages", t.languages},
                     {"template_ids", t.template_ids},
                     {"template_language", t.template_language}});
  }
  json j = {{"tasks", tasks},
            {"seen_languages", m.seen_languages},
            {"aggregation", std::string(to_string(m.options.aggregation))},
            {"include_negated", m.options.include_negated},
            {"max_statement_batch", m.options.max_statement_batch}};
  if (m.template_pack) j["template_pack"] = m.template_pack->string();
  if (m.task_catalog) j["task_catalog"] = m.task_catalog->string();
  return j;
}

// ---------------------------------------------------------------------------
// Statistics

double arithmetic_mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double population_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double mu = arithmetic_mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

double geometric_mean(std::span<const double> xs, bool* zero) {
  if (zero) *zero = false;
  if (xs.empty()) return 0.0;
  long double acc = 0.0L;
  for (double x : xs) {
    if (x < 0.0) throw InvalidInputError("geometric mean of a negative value");
    if (x == 0.0) {
      if (zero) *zero = true;
      return 0.0;
    }
    acc += std::log(static_cast<long double>(x));
  }
  return static_cast<double>(std::exp(acc / static_cast<long double>(xs.size())));
}

double random_baseline(const TaskSchema& schema, std::span<const FieldMap> examples) {
  if (schema.label_space.kind == LabelSpace::Kind::fixed) {
    return schema.label_space.labels.empty() ? 0.0 : 1.0 / static_cast<double>(schema.label_space.labels.size());
  }
  if (examples.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& ex : examples) acc += 1.0 / static_cast<double>(enumerate_candidates(schema, ex).size());
  return acc / static_cast<double>(examples.size());
}

// ---------------------------------------------------------------------------
// Evaluation

double TaskEval::macro() const {
  std::vector<double> a;
  for (const auto& l : languages) a.push_back(l.accuracy());
  return arithmetic_mean(a);
}

std::size_t TaskEval::total() const {
  std::size_t n = 0;
  for (const auto& l : languages) n += l.total;
  return n;
}

std::size_t TaskEval::correct() const {
  std::size_t n = 0;
  for (const auto& l : languages) n += l.correct;
  return n;
}

double TaskEval::micro() const {
  const auto n = total();
  return n ? static_cast<double>(correct()) / static_cast<double>(n) : 0.0;
}

TaskEval evaluate_task(const EvalTaskSpec& spec, const Corpus& corpus, const TaskSchema& schema,
                       const TemplateRegistry& registry, Scorer& model, const EvalOptions& options) {
  TaskEval out;
  out.task_id = spec.task_id;
  out.aggregation = options.aggregation;

  std::vector<const StatementTemplate*> templates;
  if (spec.template_ids.empty()) {
    templates = registry.for_task(spec.task_id, spec.template_language);
  } else {
    for (const auto& id : spec.template_ids) {
      const auto* t = registry.find(id);
      if (!t) throw InvalidConfigError("task '" + spec.task_id + "': unknown template '" + id + "'");
      if (t->task_id != spec.task_id) {
        throw InvalidConfigError("template '" + id + "' belongs to task '" + t->task_id + "'");
      }
      templates.push_back(t);
    }
  }
  if (templates.empty()) throw InvalidConfigError("task '" + spec.task_id + "' has no evaluation templates");
  for (const auto* t : templates) out.template_ids.push_back(t->template_id);

  auto langs = spec.languages.empty() ? corpus.languages() : spec.languages;
  std::sort(langs.begin(), langs.end());
  langs.erase(std::unique(langs.begin(), langs.end()), langs.end());

  std::vector<FieldMap> all_examples;
  for (const auto& lang : langs) {
    std::vector<const CorpusRow*> rows;
    for (const auto& r : corpus.rows) {
      if (r.language == lang) rows.push_back(&r);
    }
    if (rows.empty()) {
      out.warnings.push_back("task '" + spec.task_id + "': no examples for language '" + lang + "', skipped");
      continue;
    }
    std::vector<ClassificationRequest> reqs;
    std::vector<std::string> gold;
    for (const auto* r : rows) {
      gold.push_back(gold_value(schema, r->fields));
      reqs.push_back({&r->fields, &schema, templates, options.aggregation, &model, options.include_negated});
      all_examples.push_back(r->fields);
    }
    const auto results = classify_batch(reqs, options.max_statement_batch);
    LanguageAccuracy acc{lang, 0, rows.size()};
    for (std::size_t i = 0; i < results.size(); ++i) {
      acc.correct += results[i].predicted == gold[i] ? 1 : 0;
      out.dropped_templates += results[i].dropped_templates;
    }
    out.languages.push_back(acc);
  }
  if (out.dropped_templates) {
    out.warnings.push_back(std::to_string(out.dropped_templates) + " template renders dropped");
  }
  out.random_baseline = random_baseline(schema, all_examples);
  return out;
}

std::vector<RunEval> evaluate_runs(const EvalManifest& manifest, std::span<ModelHandle* const> models,
                                   const std::string& model_label) {
  TaskCatalog catalog = TaskCatalog::builtin();
  if (manifest.task_catalog) catalog.merge(TaskCatalog::load(*manifest.task_catalog));
  const auto registry = load_template_pack(manifest.template_pack.value_or(default_template_pack()), catalog);

  std::vector<RunEval> runs(models.size());
  for (std::size_t m = 0; m < models.size(); ++m) {
    runs[m].model = model_label;
    runs[m].seed = models[m]->provenance().seed;
    runs[m].parameters = models[m]->encoder().parameter_count();
  }
  for (const auto& spec : manifest.tasks) {
    const auto corpus = load_corpus(spec.manifest);
    if (corpus.task_id != spec.task_id) {
      throw InvalidConfigError("corpus '" + spec.manifest.string() + "' holds task '" + corpus.task_id +
                               "', expected '" + spec.task_id + "'");
    }
    const auto& schema = catalog.get(spec.task_id);
    for (std::size_t m = 0; m < models.size(); ++m) {
      runs[m].tasks.push_back(evaluate_task(spec, corpus, schema, registry, *models[m], manifest.options));
    }
  }
  return runs;
}

// ---------------------------------------------------------------------------
// Aggregation

namespace {

CellStats stats_of(std::vector<double> xs) {
  CellStats c;
  c.mean = arithmetic_mean(xs);
  c.std = population_std(xs);
  c.per_run = std::move(xs);
  return c;
}

json cell_json(const CellStats& c) { return {{"mean", c.mean}, {"std", c.std}, {"per_run", c.per_run}}; }

json task_json(const TaskEval& t) {
  json langs = json::array();
  for (const auto& l : t.languages) {
    langs.push_back({{"language", l.language}, {"correct", l.correct}, {"total", l.total}, {"accuracy", l.accuracy()}});
  }
  return {{"task_id", t.task_id},
          {"template_ids", t.template_ids},
          {"aggregation", std::string(to_string(t.aggregation))},
          {"random_baseline", t.random_baseline},
          {"dropped_templates", t.dropped_templates},
          {"warnings", t.warnings},
          {"languages", langs},
          {"macro", t.macro()},
          {"micro", t.micro()}};
}

TaskEval task_eval_from_json(const json& j) {
  TaskEval t;
  t.task_id = j.at("task_id").get<std::string>();
  t.template_ids = j.at("template_ids").get<std::vector<std::string>>();
  t.aggregation = parse_aggregation(j.at("aggregation").get<std::string>());
  t.random_baseline = j.at("random_baseline").get<double>();
  t.dropped_templates = j.value("dropped_templates", std::size_t{0});
  t.warnings = j.value("warnings", std::vector<std::string>{});
  for (const auto& l : j.at("languages")) {
    t.languages.push_back(
        {l.at("language").get<std::string>(), l.at("correct").get<std::size_t>(), l.at("total").get<std::size_t>()});
  }
  return t;
}

}  // namespace

EvalReport aggregate(const std::vector<RunEval>& runs, const std::set<std::string>& seen_languages) {
  if (runs.empty()) throw InvalidInputError("aggregate: no runs");
  EvalReport report;
  report.runs = runs;
  report.seen_languages = seen_languages;
  for (const auto& r : runs) {
    for (const auto& t : r.tasks) {
      const std::string a(to_string(t.aggregation));
      if (report.aggregation.empty()) report.aggregation = a;
      else if (report.aggregation != a) report.aggregation = "mixed";
    }
  }

  std::vector<std::string> order;
  for (const auto& r : runs) {
    if (std::find(order.begin(), order.end(), r.model) == order.end()) order.push_back(r.model);
  }
  for (const auto& label : order) {
    std::vector<const RunEval*> group;
    for (const auto& r : runs) {
      if (r.model == label) group.push_back(&r);
    }
    ModelSummary ms;
    ms.model = label;
    ms.parameters = group.front()->parameters;
    ms.runs = group.size();

    std::vector<std::string> task_order;
    for (const auto* r : group) {
      for (const auto& t : r->tasks) {
        if (std::find(task_order.begin(), task_order.end(), t.task_id) == task_order.end()) {
          task_order.push_back(t.task_id);
        }
      }
    }
    std::vector<double> seen_cells, unseen_cells, task_means;
    for (const auto& task : task_order) {
      TaskSummary ts;
      ts.task_id = task;
      std::vector<double> macro, micro;
      std::map<std::string, std::vector<double>> cells;
      for (const auto* r : group) {
        for (const auto& t : r->tasks) {
          if (t.task_id != task) continue;
          macro.push_back(t.macro());
          micro.push_back(t.micro());
          for (const auto& l : t.languages) cells[l.language].push_back(l.accuracy());
          ts.random_baseline = t.random_baseline;
          if (ts.template_ids.empty()) ts.template_ids = t.template_ids;
        }
      }
      ts.macro = stats_of(macro);
      ts.micro = stats_of(micro);
      std::vector<double> lang_std, seen, unseen;
      for (auto& [lang, xs] : cells) {
        auto c = stats_of(xs);
        lang_std.push_back(c.std);
        (seen_languages.count(lang) ? seen : unseen).push_back(c.mean);
        ts.per_language[lang] = std::move(c);
      }
      ts.mean_language_std = arithmetic_mean(lang_std);
      if (!seen.empty()) ts.seen_mean = arithmetic_mean(seen);
      if (!unseen.empty()) ts.unseen_mean = arithmetic_mean(unseen);
      seen_cells.insert(seen_cells.end(), seen.begin(), seen.end());
      unseen_cells.insert(unseen_cells.end(), unseen.begin(), unseen.end());
      task_means.push_back(ts.macro.mean);
      ms.tasks.push_back(std::move(ts));
    }
    ms.geometric_mean = geometric_mean(task_means, &ms.geometric_zero);
    if (!seen_cells.empty()) ms.seen_mean = arithmetic_mean(seen_cells);
    if (!unseen_cells.empty()) ms.unseen_mean = arithmetic_mean(unseen_cells);
    report.models.push_back(std::move(ms));
  }
  return report;
}

json EvalReport::to_json() const {
  json jr = json::array();
  for (const auto& r : runs) {
    json tasks = json::array();
    for (const auto& t : r.tasks) tasks.push_back(task_json(t));
    jr.push_back({{"model", r.model},
                  {"seed", r.seed},
                  {"parameters", r.parameters ? json(*r.parameters) : json(nullptr)},
                  {"tasks", tasks}});
  }
  json jm = json::array();
  for (const auto& m : models) {
    json tasks = json::array();
    for (const auto& t : m.tasks) {
      json pl = json::object();
      for (const auto& [lang, c] : t.per_language) pl[lang] = cell_json(c);
      tasks.push_back({{"task_id", t.task_id},
                       {"macro", cell_json(t.macro)},
                       {"micro", cell_json(t.micro)},
                       {"mean_language_std", t.mean_language_std},
                       {"per_language", pl},
                       {"seen_mean", opt_json(t.seen_mean)},
                       {"unseen_mean", opt_json(t.unseen_mean)},
                       {"random_baseline", t.random_baseline},
                       {"template_ids", t.template_ids}});
    }
    jm.push_back({{"model", m.model},
                  {"parameters", m.parameters ? json(*m.parameters) : json(nullptr)},
                  {"runs", m.runs},
                  {"tasks", tasks},
                  {"geometric_mean", m.geometric_mean},
                  {"geometric_zero", m.geometric_zero},
                  {"seen_mean", opt_json(m.seen_mean)},
                  {"unseen_mean", opt_json(m.unseen_mean)}});
  }
  return {{"format_version", 1},
          {"aggregation", aggregation},
          {"seen_languages", seen_languages},
          {"runs", jr},
          {"models", jm}};
}

EvalReport EvalReport::from_json(const json& j) {
  try {
    std::vector<RunEval> runs;
    for (const auto& r : j.at("runs")) {
      RunEval run;
      run.model = r.at("model").get<std::string>();
      run.seed = r.at("seed").get<std::uint64_t>();
      if (!r.at("parameters").is_null()) run.parameters = r["parameters"].get<std::size_t>();
      for (const auto& t : r.at("tasks")) run.tasks.push_back(task_eval_from_json(t));
      runs.push_back(std::move(run));
    }
    std::set<std::string> seen;
    for (const auto& l : j.at("seen_languages")) seen.insert(l.get<std::string>());
    return aggregate(runs, seen);
  } catch (const json::exception& e) {
    throw LoadError(std::string("malformed report: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

std::vector<std::string> all_tasks(const EvalReport& r) {
  std::vector<std::string> out;
  for (const auto& m : r.models) {
    for (const auto& t : m.tasks) {
      if (std::find(out.begin(), out.end(), t.task_id) == out.end()) out.push_back(t.task_id);
    }
  }
  return out;
}

const TaskSummary* find_task(const ModelSummary& m, const std::string& id) {
  for (const auto& t : m.tasks) {
    if (t.task_id == id) return &t;
  }
  return nullptr;
}

std::string params_text(const std::optional<std::size_t>& p) {
  if (!p) return "-";
  if (*p >= 1000000) return fixed(static_cast<double>(*p) / 1e6, 1) + "M";
  if (*p >= 1000) return fixed(static_cast<double>(*p) / 1e3, 1) + "K";
  return std::to_string(*p);
}

std::string table_block(const EvalReport& r, bool micro) {
  const auto tasks = all_tasks(r);
  std::string s = "| Model | Parameters |";
  for (const auto& t : tasks) s += " " + t + " |";
  s += " Geometric mean |\n|---|---|";
  for (std::size_t i = 0; i < tasks.size(); ++i) s += "---|";
  s += "---|\n";
  for (const auto& m : r.models) {
    s += "| " + m.model + (m.runs > 1 ? " (" + std::to_string(m.runs) + " runs)" : "") + " | " +
         params_text(m.parameters) + " |";
    std::vector<double> means;
    for (const auto& t : tasks) {
      const auto* ts = find_task(m, t);
      if (!ts) {
        s += " - |";
        continue;
      }
      const auto& c = micro ? ts->micro : ts->macro;
      means.push_back(c.mean);
      s += " " + fixed(100.0 * c.mean);
      if (m.runs > 1) s += " (" + fixed(100.0 * (micro ? ts->micro.std : ts->mean_language_std)) + ")";
      s += " |";
    }
    bool zero = false;
    const double g = micro ? geometric_mean(means, &zero) : m.geometric_mean;
    s += " " + fixed(100.0 * g) + ((micro ? zero : m.geometric_zero) ? " (zero task)" : "") + " |\n";
  }
  s += "| Random | - |";
  std::vector<double> base;
  for (const auto& t : tasks) {
    double b = 0.0;
    for (const auto& m : r.models) {
      if (const auto* ts = find_task(m, t)) b = ts->random_baseline;
    }
    base.push_back(b);
    s += " " + fixed(100.0 * b) + " |";
  }
  s += " " + fixed(100.0 * geometric_mean(base)) + " |\n";
  return s;
}

}  // namespace

std::string render_table(const EvalReport& r) {
  std::string s = "## Zero-shot accuracy (%)\n\n";
  s += "Macro average over languages. Parenthesized values are the standard deviation across runs, "
       "averaged over languages. Aggregation over templates: " + r.aggregation + ".\n\n";
  s += table_block(r, false);
  s += "\n### Micro average (pooled examples)\n\n";
  s += "Parenthesized values are the standard deviation of the pooled accuracy across runs.\n\n";
  s += table_block(r, true);
  if (!r.seen_languages.empty()) {
    s += "\n### Seen vs. unseen languages\n\n| Model | Seen | Unseen |\n|---|---|---|\n";
    for (const auto& m : r.models) {
      s += "| " + m.model + " | " + (m.seen_mean ? fixed(100.0 * *m.seen_mean) : "-") + " | " +
           (m.unseen_mean ? fixed(100.0 * *m.unseen_mean) : "-") + " |\n";
    }
  }
  return s;
}

void write_report(const EvalReport& report, const fs::path& dir) {
  fs::create_directories(dir);
  write_file(dir / "report.json", report.to_json().dump(2) + "\n");
  write_file(dir / "results.md", render_table(report));

  std::string csv = "model,seed,task,language,seen,correct,total,accuracy\n";
  for (const auto& r : report.runs) {
    for (const auto& t : r.tasks) {
      for (const auto& l : t.languages) {
        csv += r.model + "," + std::to_string(r.seed) + "," + t.task_id + "," + l.language + "," +
               (report.seen_languages.count(l.language) ? "1" : "0") + "," + std::to_string(l.correct) + "," +
               std::to_string(l.total) + "," + fixed(l.accuracy(), 6) + "\n";
      }
    }
  }
  write_file(dir / "per_language.csv", csv);

  for (const auto& task : all_tasks(report)) {
    std::set<std::string> langs;
    for (const auto& m : report.models) {
      if (const auto* ts = find_task(m, task)) {
        for (const auto& [l, c] : ts->per_language) langs.insert(l);
      }
    }
    std::string b = "language,seen";
    for (const auto& m : report.models) b += "," + m.model;
    b += "\n";
    for (const auto& l : langs) {
      b += l + "," + (report.seen_languages.count(l) ? "1" : "0");
      for (const auto& m : report.models) {
        b += ",";
        const auto* ts = find_task(m, task);
        if (!ts) continue;
        if (auto it = ts->per_language.find(l); it != ts->per_language.end()) b += fixed(100.0 * it->second.mean, 4);
      }
      b += "\n";
    }
    write_file(dir / ("bars_" + task + ".csv"), b);
  }
}

std::vector<fs::path> plot_report(const EvalReport& report, const fs::path& dir) {
  static const char* palette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"};
  fs::create_directories(dir);
  std::vector<fs::path> out;
  for (const auto& task : all_tasks(report)) {
    std::set<std::string> langs;
    for (const auto& m : report.models) {
      if (const auto* ts = find_task(m, task)) {
        for (const auto& [l, c] : ts->per_language) langs.insert(l);
      }
    }
    const double bar = 14.0, gap = 12.0, left = 50.0, top = 40.0, height = 220.0;
    const double group = bar * static_cast<double>(report.models.size()) + gap;
    const double width = left + group * static_cast<double>(langs.size()) + 160.0;
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(width, 0) + "\" height=\"" +
                    fixed(top + height + 50, 0) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    s += "<text x=\"" + fixed(left, 0) + "\" y=\"20\" font-size=\"14\">" + task + " accuracy (%) per language</text>\n";
    for (int tick = 0; tick <= 100; tick += 25) {
      const double y = top + height * (1.0 - tick / 100.0);
      s += "<line x1=\"" + fixed(left, 1) + "\" x2=\"" + fixed(width - 160, 1) + "\" y1=\"" + fixed(y, 1) + "\" y2=\"" +
           fixed(y, 1) + "\" stroke=\"#ddd\"/>\n";
      s += "<text x=\"" + fixed(left - 6, 1) + "\" y=\"" + fixed(y + 4, 1) + "\" text-anchor=\"end\">" +
           std::to_string(tick) + "</text>\n";
    }
    std::size_t li = 0;
    for (const auto& l : langs) {
      const double x0 = left + gap / 2 + group * static_cast<double>(li);
      for (std::size_t mi = 0; mi < report.models.size(); ++mi) {
        const auto* ts = find_task(report.models[mi], task);
        if (!ts) continue;
        auto it = ts->per_language.find(l);
        if (it == ts->per_language.end()) continue;
        const double h = height * it->second.mean;
        s += "<rect x=\"" + fixed(x0 + bar * static_cast<double>(mi), 1) + "\" y=\"" + fixed(top + height - h, 1) +
             "\" width=\"" + fixed(bar - 1, 1) + "\" height=\"" + fixed(h, 1) + "\" fill=\"" + palette[mi % 6] +
             "\"/>\n";
      }
      const bool seen = report.seen_languages.count(l) > 0;
      s += "<text x=\"" + fixed(x0 + (group - gap) / 2, 1) + "\" y=\"" + fixed(top + height + 15, 1) +
           "\" text-anchor=\"middle\"" + (seen ? "" : " font-style=\"italic\"") + ">" + l + "</text>\n";
      ++li;
    }
    for (std::size_t mi = 0; mi < report.models.size(); ++mi) {
      const double y = top + 14.0 * static_cast<double>(mi);
      s += "<rect x=\"" + fixed(width - 150, 1) + "\" y=\"" + fixed(y, 1) + "\" width=\"10\" height=\"10\" fill=\"" +
           palette[mi % 6] + "\"/>\n<text x=\"" + fixed(width - 135, 1) + "\" y=\"" + fixed(y + 9, 1) + "\">" +
           report.models[mi].model + "</text>\n";
    }
    s += "<text x=\"" + fixed(left, 0) + "\" y=\"" + fixed(top + height + 38, 0) +
         "\">italic labels: languages unseen during statement tuning</text>\n</svg>\n";
    const auto path = dir / ("accuracy_" + task + ".svg");
    write_file(path, s);
    out.push_back(path);
  }
  return out;
}

}  // namespace stmt

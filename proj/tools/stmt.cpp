// stmt: statement-tuning toolkit driver.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "stmt/cli_config.hpp"
#include "stmt/corpus.hpp"
#include "stmt/digest.hpp"
#include "stmt/error.hpp"
#include "stmt/synth.hpp"
#include "stmt/zeroshot_classifier.hpp"

using namespace stmt;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::vector<fs::path> split_paths(const std::string& list) {
  std::vector<fs::path> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.emplace_back(item);
  }
  return out;
}

FieldMap fields_of(const json& j) {
  FieldMap f;
  const json& src = j.contains("fields") && j["fields"].is_object() ? j["fields"] : j;
  for (const auto& [k, v] : src.items()) f[k] = v.is_string() ? v.get<std::string>() : v.dump();
  return f;
}

int cmd_build_data(const fs::path& spec_path, const fs::path& out, const std::string& report_path) {
  const auto spec = load_mixture_spec(spec_path);
  auto [ds, report] = build_from_spec(spec);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_dataset(ds, out);
  const fs::path rp = report_path.empty() ? fs::path(out.string() + ".report.json") : fs::path(report_path);
  write_file(rp, report.to_json().dump(2) + "\n");
  std::cout << ds.records.size() << " statements -> " << out.string() << "\n";
  for (const auto& n : report.notes) std::cerr << "note: " << n << "\n";
  return kExitOk;
}

int cmd_train(const fs::path& data, const std::string& config_path, const std::string& backend, const fs::path& out) {
  TrainConfig cfg = train_preset(backend);
  if (!config_path.empty()) cfg = train_config_from_json(json::parse(read_file(config_path)), cfg);
  const auto ds = read_dataset(data);
  TrainOptions opt;
  opt.out_dir = out;
  opt.on_epoch = [](const EpochLog& e) {
    std::cout << "epoch " << e.epoch << " loss " << e.train_loss;
    if (e.validation_accuracy) std::cout << " validation " << *e.validation_accuracy;
    std::cout << (e.improved ? " *" : "") << std::endl;
  };
  train(ds, cfg, backend, opt);
  std::cout << "checkpoint -> " << out.string() << "\n";
  return kExitOk;
}

struct ClassifyArgs {
  std::string model, task, input, templates, agg = "mean", lang = "en", out, catalog;
  bool include_negated = false, verbose = false;
  std::size_t max_batch = 256;
};

int cmd_classify(const ClassifyArgs& a) {
  TaskCatalog catalog = TaskCatalog::builtin();
  if (!a.catalog.empty()) catalog.merge(TaskCatalog::load(a.catalog));
  const auto& schema = catalog.get(a.task);
  const auto registry = load_template_pack(a.templates, catalog);
  const auto templates = registry.for_task(a.task, a.lang);
  if (templates.empty()) throw InvalidConfigError("no templates for task '" + a.task + "' in language '" + a.lang + "'");
  const auto aggregation = parse_aggregation(a.agg);
  auto model = load_model(a.model);

  std::vector<FieldMap> examples;
  std::ifstream in(a.input);
  if (!in) throw LoadError("cannot read " + a.input);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      examples.push_back(fields_of(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw ReadError(a.input + ": " + e.what(), lineno);
    }
  }
  std::vector<ClassificationRequest> requests;
  for (const auto& ex : examples) {
    requests.push_back({&ex, &schema, templates, aggregation, &model, a.include_negated});
  }
  const auto results = classify_batch(requests, a.max_batch);
  std::string text;
  for (const auto& r : results) text += r.to_json(a.verbose).dump() + "\n";
  if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
  write_file(a.out, text);
  std::cout << results.size() << " predictions -> " << a.out << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& models, const fs::path& tasks, const fs::path& out, const std::string& label) {
  const auto manifest = load_eval_manifest(tasks);
  std::vector<ModelHandle> handles;
  for (const auto& p : split_paths(models)) handles.push_back(load_model(p));
  if (handles.empty()) throw InvalidConfigError("--model names no checkpoint");
  std::vector<ModelHandle*> ptrs;
  for (auto& h : handles) ptrs.push_back(&h);
  const auto runs = evaluate_runs(manifest, ptrs, label.empty() ? handles.front().backend_id() : label);
  const auto report = aggregate(runs, manifest.seen_languages);
  write_report(report, out);
  std::cout << render_table(report);
  return kExitOk;
}

int cmd_plot(const fs::path& report_path, const fs::path& out) {
  const auto report = EvalReport::from_json(json::parse(read_file(report_path)));
  for (const auto& p : plot_report(report, out)) std::cout << p.string() << "\n";
  return kExitOk;
}

int cmd_bench(const fs::path& model_dir, const std::string& config_path, const fs::path& out, const std::string& label) {
  const BenchConfig cfg = config_path.empty() ? BenchConfig{} : load_bench_config(config_path);
  auto model = load_model(model_dir);
  const auto report = run_bench(model, cfg, label.empty() ? model.backend_id() : label);
  write_bench(report, out);
  std::cout << render_bench_table(report);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  return kExitOk;
}

int cmd_inspect(const std::string& task, const std::string& lang, const std::string& pack) {
  const auto& catalog = TaskCatalog::builtin();
  const auto registry = load_template_pack(pack.empty() ? default_template_pack() : fs::path(pack), catalog);
  const auto& schema = catalog.get(task);
  const auto templates = registry.for_task(task, lang);
  for (const auto* t : templates) {
    const auto violations = validate_template(*t, schema);
    std::cout << t->template_id << "\t" << to_string(t->polarity) << "\t";
    if (violations.empty()) {
      std::cout << "ok";
    } else {
      for (std::size_t i = 0; i < violations.size(); ++i) std::cout << (i ? "; " : "") << violations[i].message();
    }
    std::cout << "\t" << t->pattern << "\n";
  }
  std::cout << templates.size() << " template(s) for " << task << " [" << lang << "]\n";
  return kExitOk;
}

int cmd_validate(const fs::path& config, const std::string& stages) {
  const auto check = validate_config(config, parse_stages(stages));
  if (!check.ok()) {
    for (const auto& v : check.violations) std::cerr << "violation: " << v << "\n";
    return kExitConfig;
  }
  std::cout << check.config->resolved().dump(2) << "\n";
  return kExitOk;
}

int cmd_run(const fs::path& config, const std::string& stages) {
  const auto parsed = parse_stages(stages);
  const auto check = validate_config(config, parsed);
  if (!check.ok()) {
    for (const auto& v : check.violations) std::cerr << "violation: " << v << "\n";
    return kExitConfig;
  }
  return run(*check.config, parsed, std::cout);
}

// Learnable toy world: sib200 and figqa training corpora in English and the
// cipher language, plus a held-out xcopa test corpus.
int cmd_synth(const fs::path& out, std::uint64_t seed, std::size_t rows, std::size_t test_rows) {
  const auto world = SynthWorld::make(seed);
  const std::vector<std::pair<std::string, std::size_t>> train_rows{{"en", rows}, {world.cipher_language, rows}};
  const std::vector<std::pair<std::string, std::size_t>> eval_rows{{"en", test_rows}, {world.cipher_language, test_rows}};
  const std::vector<std::pair<std::string, Corpus>> corpora{
      {"sib200", world_topic_corpus(world, train_rows, seed + 1)},
      {"figqa", world_completion_corpus(world, train_rows, seed + 2)},
      {"xcopa", world_choice_corpus(world, eval_rows, seed + 3)},
  };
  for (const auto& [name, corpus] : corpora) {
    write_jsonl_corpus(corpus, out);
    std::cout << name << ": " << corpus.rows.size() << " rows -> " << (out / (name + ".manifest.json")).string() << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Statement-tuning toolkit: build statement data, fine-tune, classify, evaluate, benchmark"};
  app.require_subcommand(1);

  std::string spec, out, report, data, config, backend = "tiny-encoder", model, tasks, label, task, lang = "en", pack,
                                                 stages;
  std::uint64_t seed = 1;
  std::size_t rows = 1500, test_rows = 600;
  ClassifyArgs ca;

  auto* build = app.add_subcommand("build-data", "Build a statement dataset from a mixture spec");
  build->add_option("--spec", spec, "Mixture spec JSON")->required()->check(CLI::ExistingFile);
  build->add_option("--out", out, "Dataset file to write")->required();
  build->add_option("--report", report, "Build report path (default <out>.report.json)");

  auto* tr = app.add_subcommand("train", "Fine-tune a statement discriminator");
  tr->add_option("--data", data, "Statement dataset file")->required()->check(CLI::ExistingFile);
  tr->add_option("--config", config, "Training config JSON overriding the backend preset")->check(CLI::ExistingFile);
  tr->add_option("--backend", backend, "Backend id")->capture_default_str();
  tr->add_option("--out", out, "Checkpoint directory")->required();

  auto* cl = app.add_subcommand("classify", "Zero-shot classify JSON-lines examples");
  cl->add_option("--model", ca.model, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
  cl->add_option("--task", ca.task, "Task id")->required();
  cl->add_option("--input", ca.input, "JSON lines, one example per line")->required()->check(CLI::ExistingFile);
  cl->add_option("--templates", ca.templates, "Template pack")->required()->check(CLI::ExistingFile);
  cl->add_option("--agg", ca.agg, "Aggregation: mean or max")->capture_default_str();
  cl->add_option("--lang", ca.lang, "Template language tag")->capture_default_str();
  cl->add_option("--catalog", ca.catalog, "Extra task schemas JSON")->check(CLI::ExistingFile);
  cl->add_option("--max-batch", ca.max_batch, "Statements per scoring call")->capture_default_str();
  cl->add_flag("--include-negated", ca.include_negated, "Score negated templates as complements");
  cl->add_flag("--verbose", ca.verbose, "Include per-statement scores");
  cl->add_option("--out", ca.out, "Predictions file")->required();

  auto* ev = app.add_subcommand("eval", "Evaluate checkpoints on held-out tasks");
  ev->add_option("--model", model, "Checkpoint directories, comma separated (one per seed)")->required();
  ev->add_option("--tasks", tasks, "Evaluation manifest JSON")->required()->check(CLI::ExistingFile);
  ev->add_option("--out", out, "Report directory")->required();
  ev->add_option("--label", label, "Model row label (default backend id)");

  auto* pl = app.add_subcommand("plot", "Render per-language bar charts from a report");
  pl->add_option("--report", report, "report.json")->required()->check(CLI::ExistingFile);
  pl->add_option("--out", out, "Figure directory")->required();

  auto* be = app.add_subcommand("bench", "Measure maximum batch size and inference time");
  be->add_option("--model", model, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
  be->add_option("--config", config, "Bench config JSON")->check(CLI::ExistingFile);
  be->add_option("--out", out, "Output directory")->required();
  be->add_option("--label", label, "Model label (default backend id)");

  auto* it = app.add_subcommand("inspect-templates", "List templates of a task with validation status");
  it->add_option("--task", task, "Task id")->required();
  it->add_option("--lang", lang, "Language tag")->capture_default_str();
  it->add_option("--pack", pack, "Template pack (default: shipped pack)")->check(CLI::ExistingFile);

  auto* rn = app.add_subcommand("run", "Run stages of a run config");
  rn->add_option("--config", config, "Run config JSON")->required()->check(CLI::ExistingFile);
  rn->add_option("--stages", stages, "Comma-separated stages: build-data,train,eval,bench")->required();

  auto* vc = app.add_subcommand("validate-config", "Check a run config and print it with defaults resolved");
  vc->add_option("--config", config, "Run config JSON")->required()->check(CLI::ExistingFile);
  vc->add_option("--stages", stages, "Stages to check for")->default_val("build-data,train,eval,bench");

  auto* sy = app.add_subcommand("synth", "Write the synthetic toy-world corpora");
  sy->add_option("--out", out, "Output directory")->required();
  sy->add_option("--seed", seed, "World seed")->capture_default_str();
  sy->add_option("--rows", rows, "Training rows per language")->capture_default_str();
  sy->add_option("--test-rows", test_rows, "Test rows per language")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*build) return cmd_build_data(spec, out, report);
    if (*tr) return cmd_train(data, config, backend, out);
    if (*cl) return cmd_classify(ca);
    if (*ev) return cmd_eval(model, tasks, out, label);
    if (*pl) return cmd_plot(report, out);
    if (*be) return cmd_bench(model, config, out, label);
    if (*it) return cmd_inspect(task, lang, pack);
    if (*rn) return cmd_run(config, stages);
    if (*vc) return cmd_validate(config, stages);
    if (*sy) return cmd_synth(out, seed, rows, test_rows);
  } catch (const InvalidConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidSpecError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStage;
  }
  return kExitOk;
}

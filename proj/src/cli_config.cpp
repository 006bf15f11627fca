#include "stmt/cli_config.hpp"

#include <algorithm>
#include <ostream>

#include "stmt/digest.hpp"
#include "stmt/error.hpp"
#include "stmt/json_io.hpp"

namespace stmt {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::build_data: return "build-data";
    case Stage::train: return "train";
    case Stage::eval: return "eval";
    case Stage::bench: return "bench";
  }
  return "?";
}

std::vector<Stage> parse_stages(std::string_view list) {
  std::vector<Stage> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const auto end = std::min(list.find(',', start), list.size());
    const auto name = list.substr(start, end - start);
    Stage s;
    if (name == "build-data") s = Stage::build_data;
    else if (name == "train") s = Stage::train;
    else if (name == "eval") s = Stage::eval;
    else if (name == "bench") s = Stage::bench;
    else throw InvalidConfigError("unknown stage '" + std::string(name) + "'");
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
    start = end + 1;
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

bool has(const std::vector<Stage>& stages, Stage s) { return std::find(stages.begin(), stages.end(), s) != stages.end(); }

fs::path resolve(const fs::path& base, const std::string& p) {
  return fs::path(p).is_absolute() || base.empty() ? fs::path(p) : base / p;
}

void require_file(const fs::path& p, const std::string& what, std::vector<std::string>& v) {
  if (!fs::exists(p)) v.push_back(what + " not found: " + p.string());
}

json stage_copy(const RunConfig& c, const std::vector<std::pair<std::string, fs::path>>& inputs) {
  json in = json::object();
  if (c.record_digests) {
    for (const auto& [name, p] : inputs) {
      if (fs::is_regular_file(p)) in[name] = {{"path", p.string()}, {"sha256", sha256_file(p)}};
      else if (fs::is_directory(p) && fs::exists(p / "weights.bin")) {
        in[name] = {{"path", p.string()}, {"weights_sha256", sha256_file(p / "weights.bin")}};
      }
    }
  }
  return {{"config", c.resolved()}, {"inputs", in}};
}

void write_copy(const RunConfig& c, const fs::path& dir, const std::vector<std::pair<std::string, fs::path>>& inputs) {
  if (!c.copy_config) return;
  fs::create_directories(dir);
  write_file(dir / "resolved_config.json", stage_copy(c, inputs).dump(2) + "\n");
}

}  // namespace

json RunConfig::resolved() const {
  json j = json::object();
  j["seed"] = seed ? json(*seed) : json(nullptr);
  j["output_root"] = output_root.string();
  j["provenance"] = {{"copy_config", copy_config}, {"record_digests", record_digests}};
  if (mixture) j["mixture"] = to_json(*mixture);
  if (train) {
    json t = to_json(train->config);
    t["backend"] = train->backend;
    t["dataset"] = train->dataset ? json(train->dataset->string()) : json(nullptr);
    j["train"] = t;
  }
  if (eval) {
    json e = to_json(eval->manifest);
    json models = json::array();
    for (const auto& m : eval->models) models.push_back(m.string());
    e["models"] = models;
    e["label"] = eval->label;
    j["eval"] = e;
  }
  if (bench) {
    json b = to_json(bench->config);
    b["model"] = bench->model ? json(bench->model->string()) : json(nullptr);
    b["label"] = bench->label;
    j["bench"] = b;
  }
  return j;
}

ConfigCheck validate_config_json(const json& j, const fs::path& base_dir, const std::vector<Stage>& stages) {
  ConfigCheck check;
  auto& v = check.violations;
  if (!j.is_object()) {
    v.push_back("run config must be a JSON object");
    return check;
  }
  for (const auto& k : unknown_keys(j, {"seed", "output_root", "provenance", "mixture", "train", "eval", "bench"})) {
    v.push_back("unknown key '" + k + "'");
  }
  RunConfig c;
  try {
    if (j.contains("seed") && !j["seed"].is_null()) c.seed = j["seed"].get<std::uint64_t>();
    c.output_root = resolve(base_dir, j.value("output_root", std::string("runs/default")));
    if (j.contains("provenance")) {
      const auto& p = j["provenance"];
      for (const auto& k : unknown_keys(p, {"copy_config", "record_digests"})) v.push_back("provenance: unknown key '" + k + "'");
      c.copy_config = p.value("copy_config", true);
      c.record_digests = p.value("record_digests", true);
    }
  } catch (const json::exception& e) {
    v.push_back(std::string("run config: ") + e.what());
  }

  if (j.contains("mixture")) {
    try {
      json m = j["mixture"];
      if (!m.contains("seed") && c.seed) m["seed"] = *c.seed;
      c.mixture = mixture_spec_from_json(m, base_dir);
      validate_mixture_spec(*c.mixture, TaskCatalog::builtin());
    } catch (const Error& e) {
      v.push_back(std::string("mixture: ") + e.what());
    } catch (const json::exception& e) {
      v.push_back(std::string("mixture: ") + e.what());
    }
  }
  if (j.contains("train")) {
    try {
      json t = j["train"];
      TrainStage ts;
      if (t.contains("backend")) {
        ts.backend = t["backend"].get<std::string>();
        t.erase("backend");
      }
      backend_info(ts.backend);
      if (t.contains("dataset")) {
        if (!t["dataset"].is_null()) ts.dataset = resolve(base_dir, t["dataset"].get<std::string>());
        t.erase("dataset");
      }
      TrainConfig base = train_preset(ts.backend);
      if (c.seed) base.seed = *c.seed;
      ts.config = train_config_from_json(t, base);
      c.train = std::move(ts);
    } catch (const Error& e) {
      v.push_back(std::string("train: ") + e.what());
    } catch (const json::exception& e) {
      v.push_back(std::string("train: ") + e.what());
    }
  }
  if (j.contains("eval")) {
    try {
      json e = j["eval"];
      EvalStage es;
      if (e.contains("models")) {
        for (const auto& m : e["models"]) es.models.push_back(resolve(base_dir, m.get<std::string>()));
        e.erase("models");
      }
      es.label = e.value("label", std::string());
      e.erase("label");
      es.manifest = eval_manifest_from_json(e, base_dir);
      if (es.label.empty()) es.label = c.train ? c.train->backend : "model";
      c.eval = std::move(es);
    } catch (const Error& e) {
      v.push_back(std::string("eval: ") + e.what());
    } catch (const json::exception& e) {
      v.push_back(std::string("eval: ") + e.what());
    }
  }
  if (j.contains("bench")) {
    try {
      json b = j["bench"];
      BenchStage bs;
      if (b.contains("model")) {
        if (!b["model"].is_null()) bs.model = resolve(base_dir, b["model"].get<std::string>());
        b.erase("model");
      }
      bs.label = b.value("label", std::string());
      b.erase("label");
      bs.config = bench_config_from_json(b);
      if (bs.label.empty()) bs.label = c.train ? c.train->backend : "model";
      c.bench = std::move(bs);
    } catch (const Error& e) {
      v.push_back(std::string("bench: ") + e.what());
    } catch (const json::exception& e) {
      v.push_back(std::string("bench: ") + e.what());
    }
  }

  // Stage requirements.
  auto block = [&](Stage s, bool present, const char* key) {
    if (has(stages, s) && !present && !j.contains(key)) {
      v.push_back("stage '" + std::string(to_string(s)) + "' requires a '" + key + "' block");
    }
  };
  block(Stage::build_data, c.mixture.has_value(), "mixture");
  block(Stage::train, c.train.has_value(), "train");
  block(Stage::eval, c.eval.has_value(), "eval");
  block(Stage::bench, c.bench.has_value(), "bench");

  if (has(stages, Stage::build_data) && c.mixture) {
    const auto& m = *c.mixture;
    for (const auto& e : m.entries) require_file(resolve(m.base_dir, e.manifest.string()), "manifest of '" + e.dataset_id + "'", v);
    if (!m.template_pack.empty()) require_file(resolve(m.base_dir, m.template_pack.string()), "template pack", v);
    if (!m.task_catalog.empty()) require_file(resolve(m.base_dir, m.task_catalog.string()), "task catalog", v);
    for (const auto& p : m.translated_packs) require_file(resolve(m.base_dir, p.string()), "translated pack", v);
  }
  if (has(stages, Stage::train) && c.train) {
    if (!has(stages, Stage::build_data)) {
      if (c.train->dataset) require_file(*c.train->dataset, "training dataset", v);
      else v.push_back("stage 'train' needs a dataset: run 'build-data' too or set train.dataset");
    } else if (c.train->dataset) {
      v.push_back("train.dataset is set while 'build-data' also runs; remove one");
    }
  }
  if (has(stages, Stage::eval) && c.eval) {
    for (const auto& t : c.eval->manifest.tasks) require_file(t.manifest, "test corpus of '" + t.task_id + "'", v);
    if (c.eval->manifest.template_pack) require_file(*c.eval->manifest.template_pack, "template pack", v);
    if (!has(stages, Stage::train)) {
      if (c.eval->models.empty()) v.push_back("stage 'eval' needs a trained model: run 'train' too or set eval.models");
      for (const auto& m : c.eval->models) require_file(m, "model", v);
    }
  }
  if (has(stages, Stage::bench) && c.bench && !has(stages, Stage::train)) {
    if (c.bench->model) require_file(*c.bench->model, "model", v);
    else v.push_back("stage 'bench' needs a trained model: run 'train' too or set bench.model");
  }
  check.config = std::move(c);
  return check;
}

ConfigCheck validate_config(const fs::path& path, const std::vector<Stage>& stages) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    ConfigCheck c;
    c.violations.push_back("config '" + path.string() + "' is not valid JSON: " + e.what());
    return c;
  } catch (const Error& e) {
    ConfigCheck c;
    c.violations.push_back(e.what());
    return c;
  }
  return validate_config_json(j, path.parent_path(), stages);
}

int run(const RunConfig& config, const std::vector<Stage>& stages, std::ostream& log) {
  Stage current = Stage::build_data;
  try {
    if (has(stages, Stage::build_data)) {
      current = Stage::build_data;
      log << "[build-data] building mixture" << std::endl;
      auto [ds, report] = build_from_spec(*config.mixture);
      fs::create_directories(config.data_dir());
      write_dataset(ds, config.dataset_path());
      write_file(config.data_dir() / "build_report.json", report.to_json().dump(2) + "\n");
      std::vector<std::pair<std::string, fs::path>> inputs;
      for (const auto& e : config.mixture->entries) {
        inputs.push_back({"manifest:" + e.dataset_id, resolve(config.mixture->base_dir, e.manifest.string())});
      }
      write_copy(config, config.data_dir(), inputs);
      log << "[build-data] " << ds.records.size() << " statements -> " << config.dataset_path().string() << std::endl;
    }
    if (has(stages, Stage::train)) {
      current = Stage::train;
      const auto data = config.train->dataset.value_or(config.dataset_path());
      log << "[train] " << config.train->backend << " on " << data.string() << std::endl;
      const auto ds = read_dataset(data);
      TrainOptions opt;
      opt.out_dir = config.model_dir();
      opt.on_epoch = [&](const EpochLog& e) {
        log << "[train] epoch " << e.epoch << " loss " << e.train_loss;
        if (e.validation_accuracy) log << " validation accuracy " << *e.validation_accuracy;
        log << std::endl;
      };
      train(ds, config.train->config, config.train->backend, opt);
      write_copy(config, config.model_dir(), {{"dataset", data}});
    }
    if (has(stages, Stage::eval)) {
      current = Stage::eval;
      auto paths = config.eval->models;
      if (paths.empty()) paths.push_back(config.model_dir());
      std::vector<ModelHandle> models;
      for (const auto& p : paths) models.push_back(load_model(p));
      std::vector<ModelHandle*> ptrs;
      for (auto& m : models) ptrs.push_back(&m);
      log << "[eval] " << paths.size() << " model(s), " << config.eval->manifest.tasks.size() << " task(s)" << std::endl;
      const auto runs = evaluate_runs(config.eval->manifest, ptrs, config.eval->label);
      const auto report = aggregate(runs, config.eval->manifest.seen_languages);
      write_report(report, config.eval_dir());
      std::vector<std::pair<std::string, fs::path>> inputs;
      for (std::size_t i = 0; i < paths.size(); ++i) inputs.push_back({"model:" + std::to_string(i), paths[i]});
      for (const auto& t : config.eval->manifest.tasks) inputs.push_back({"corpus:" + t.task_id, t.manifest});
      write_copy(config, config.eval_dir(), inputs);
      for (const auto& m : report.models) {
        log << "[eval] " << m.model << " geometric mean " << m.geometric_mean << std::endl;
      }
    }
    if (has(stages, Stage::bench)) {
      current = Stage::bench;
      const auto path = config.bench->model.value_or(config.model_dir());
      auto model = load_model(path);
      const auto report = run_bench(model, config.bench->config, config.bench->label);
      write_bench(report, config.bench_dir());
      write_copy(config, config.bench_dir(), {{"model", path}});
      log << "[bench] max batch " << report.max_batch << ", " << report.mean_seconds_at_max << " s/batch" << std::endl;
    }
  } catch (const std::exception& e) {
    log << "[" << to_string(current) << "] failed: " << e.what() << std::endl;
    return kExitStage;
  }
  return kExitOk;
}

}  // namespace stmt

#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "stmt/cli_config.hpp"
#include "stmt/corpus.hpp"
#include "stmt/digest.hpp"
#include "stmt/error.hpp"
#include "stmt/synth.hpp"

using namespace stmt;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct World {
  fs::path dir;

  World() : dir(fs::temp_directory_path() / "stmt_cli_world") {
    fs::remove_all(dir);
    const auto w = SynthWorld::make(5);
    write_jsonl_corpus(world_topic_corpus(w, {{"en", 120}, {"qx", 120}}, 1), dir);
    write_jsonl_corpus(world_choice_corpus(w, {{"en", 40}, {"qx", 40}}, 2), dir);
  }
  ~World() { fs::remove_all(dir); }
};

json mixture_block(const fs::path& dir) {
  return {{"entries", {{{"dataset_id", "sib200"}, {"languages", {"en", "qx"}}, {"manifest", (dir / "sib200.manifest.json").string()}}}},
          {"languages_mode", {"en", "qx"}},
          {"extra_languages", {"qx"}},
          {"per_truth_quota", 60},
          {"include_mt", false}};
}

json full_config(const fs::path& dir, const fs::path& out) {
  return {{"seed", 7},
          {"output_root", out.string()},
          {"mixture", mixture_block(dir)},
          {"train", {{"backend", "tiny-encoder-small"}, {"epochs", 1}, {"max_sequence_length", 32}}},
          {"eval", {{"tasks", {{{"task_id", "xcopa"}, {"manifest", (dir / "xcopa.manifest.json").string()}}}}}},
          {"bench", {{"repeats", 1}, {"warmup", 0}, {"probe_tokens", 8}, {"max_batch_ceiling", 8}}}};
}

bool mentions(const std::vector<std::string>& vs, const std::string& needle) {
  for (const auto& v : vs) {
    if (v.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("stage names") {
  const auto s = parse_stages("eval,build-data,train,eval");
  CHECK(s == std::vector<Stage>{Stage::build_data, Stage::train, Stage::eval});
  CHECK_THROWS_AS(parse_stages("build-data,deploy"), InvalidConfigError);
  CHECK_THROWS_AS(parse_stages(""), InvalidConfigError);
}

TEST_CASE("validation examples") {
  World w;
  const json minimal = {{"mixture", mixture_block(w.dir)}};
  CHECK(validate_config_json(minimal, {}, {Stage::build_data}).ok());
  const auto train_only = validate_config_json(minimal, {}, {Stage::train});
  CHECK_FALSE(train_only.ok());
  CHECK(mentions(train_only.violations, "'train'"));

  json typo = minimal;
  typo["train"] = {{"epcohs", 3}};
  const auto t = validate_config_json(typo, {}, {Stage::build_data, Stage::train});
  CHECK(mentions(t.violations, "epcohs"));
  json top = minimal;
  top["outptu_root"] = "x";
  CHECK(mentions(validate_config_json(top, {}, {Stage::build_data}).violations, "outptu_root"));

  json seeded = full_config(w.dir, "/tmp/x");
  const auto c = validate_config_json(seeded, {}, {Stage::build_data, Stage::train, Stage::eval, Stage::bench});
  REQUIRE(c.ok());
  const auto r = c.config->resolved();
  CHECK(r["seed"] == 7);
  CHECK(r["mixture"]["seed"] == 7);
  CHECK(r["train"]["seed"] == 7);
  CHECK(r["train"]["learning_rate"].get<double>() > 0.0);  // preset defaults echoed
  seeded["train"]["seed"] = 11;
  CHECK(validate_config_json(seeded, {}, {Stage::train, Stage::build_data}).config->train->config.seed == 11);

  const auto eval_alone = validate_config_json(full_config(w.dir, "/tmp/x"), {}, {Stage::eval});
  CHECK(mentions(eval_alone.violations, "trained model"));
  json missing = full_config(w.dir, "/tmp/x");
  missing["mixture"]["entries"][0]["manifest"] = (w.dir / "absent.manifest.json").string();
  CHECK(mentions(validate_config_json(missing, {}, {Stage::build_data}).violations, "absent.manifest.json"));
}

TEST_CASE("pipeline run: artifacts, provenance, rerun determinism") {
  World w;
  const auto out = fs::temp_directory_path() / "stmt_cli_run";
  fs::remove_all(out);
  const std::vector<Stage> stages{Stage::build_data, Stage::train, Stage::eval, Stage::bench};
  const auto check = validate_config_json(full_config(w.dir, out), {}, stages);
  REQUIRE(check.ok());
  std::ostringstream log;
  REQUIRE(run(*check.config, stages, log) == kExitOk);
  const auto& c = *check.config;
  CHECK(fs::exists(c.dataset_path()));
  CHECK(fs::exists(c.model_dir() / "weights.bin"));
  CHECK(fs::exists(c.eval_dir() / "report.json"));
  CHECK(fs::exists(c.bench_dir() / "bench.md"));

  for (const auto& d : {c.data_dir(), c.model_dir(), c.eval_dir(), c.bench_dir()}) {
    const auto copy = json::parse(read_file(d / "resolved_config.json"));
    CHECK(copy["config"] == c.resolved());
  }
  const auto model_copy = json::parse(read_file(c.model_dir() / "resolved_config.json"));
  CHECK(model_copy["inputs"]["dataset"]["sha256"] == sha256_file(c.dataset_path()));
  const auto eval_copy = json::parse(read_file(c.eval_dir() / "resolved_config.json"));
  CHECK(eval_copy["inputs"]["model:0"]["weights_sha256"] == sha256_file(c.model_dir() / "weights.bin"));

  const auto data_hash = sha256_file(c.dataset_path());
  const auto weights_hash = sha256_file(c.model_dir() / "weights.bin");
  fs::remove_all(out);
  REQUIRE(run(c, {Stage::build_data, Stage::train}, log) == kExitOk);
  CHECK(sha256_file(c.dataset_path()) == data_hash);
  CHECK(sha256_file(c.model_dir() / "weights.bin") == weights_hash);
  fs::remove_all(out);
}

TEST_CASE("a failing stage halts the run") {
  World w;
  const auto out = fs::temp_directory_path() / "stmt_cli_fail";
  fs::remove_all(out);
  auto j = full_config(w.dir, out);
  const auto check = validate_config_json(j, {}, {Stage::build_data, Stage::train});
  REQUIRE(check.ok());
  fs::remove(w.dir / "sib200.jsonl");
  std::ostringstream log;
  CHECK(run(*check.config, {Stage::build_data, Stage::train}, log) == kExitStage);
  CHECK(log.str().find("[build-data] failed") != std::string::npos);
  CHECK_FALSE(fs::exists(check.config->model_dir()));
  fs::remove_all(out);
}

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "stmt/digest.hpp"
#include "stmt/error.hpp"
#include "stmt/model_backend.hpp"
#include "stmt/rng.hpp"

using namespace stmt;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("stmt_model_" + name);
  fs::remove_all(p);
  return p;
}

// True statements carry the word TRUEMARK somewhere; false ones do not.
StatementDataset marked_dataset(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const std::vector<std::string> words{"river", "stone", "cloud", "paper", "green", "music", "table",
                                       "light", "north", "glass", "horse", "sugar"};
  StatementDataset ds;
  for (std::size_t i = 0; i < n; ++i) {
    StatementRecord r;
    r.truth = i % 2 == 0;
    const std::size_t len = 4 + rng.below(6);
    const std::size_t at = rng.below(len);
    for (std::size_t k = 0; k < len; ++k) {
      if (!r.statement.empty()) r.statement += ' ';
      r.statement += (r.truth && k == at) ? "TRUEMARK" : words[rng.below(words.size())];
    }
    r.task_id = "toy";
    r.dataset_id = "toy";
    r.language = "en";
    r.template_id = "toy-1";
    r.gold = r.truth ? "1" : "0";
    r.source_row_id = std::to_string(i);
    r.split = i % 10 == 9 ? Split::validation : Split::train;
    ds.records.push_back(std::move(r));
  }
  return ds;
}

TrainConfig quick_config() {
  TrainConfig c = train_preset("tiny-encoder-small");
  c.epochs = 1;
  c.batch_size = 16;
  c.learning_rate = 3e-3;
  c.max_sequence_length = 32;
  c.seed = 11;
  return c;
}

}  // namespace

TEST_CASE("paper presets and config validation") {
  auto c = train_preset("bert-base-multilingual-cased");
  CHECK(c.epochs == 20);
  CHECK(c.batch_size == 16);
  CHECK(c.learning_rate == 1e-6);
  CHECK(c.weight_decay == 0.1);
  CHECK(c.warmup_ratio == 0.1);
  CHECK(train_preset("mdeberta-v3-base").learning_rate == 2e-6);
  CHECK(train_preset("mdeberta-v3-base").epochs == 15);
  CHECK(train_preset("xlm-roberta-base").learning_rate == 1e-6);
  CHECK(train_preset("xlm-roberta-large").learning_rate == 2e-6);
  CHECK_THROWS_AS(train_preset("gpt-17"), BackendError);

  TrainConfig bad;
  bad.learning_rate = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidConfigError);
  bad = {};
  bad.warmup_ratio = 1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidConfigError);
  bad = {};
  bad.epochs = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidConfigError);
  CHECK_THROWS_AS(train_config_from_json({{"epochz", 3}}), InvalidConfigError);

  const auto round = train_config_from_json(to_json(c));
  CHECK(config_digest(round) == config_digest(c));
}

TEST_CASE("backends without bundled weights refuse to load") {
  CHECK_THROWS_AS(init_model("xlm-roberta-large", 1), BackendError);
  CHECK_THROWS_AS(init_model("nope", 1), BackendError);
  CHECK(backend_info("tiny-encoder").dims.has_value());
}

TEST_CASE("ST_DEVICE selects kernels") {
  setenv("ST_DEVICE", "cpu", 1);
  CHECK(device_exec() == kernels::Exec::serial);
  setenv("ST_DEVICE", "omp", 1);
  CHECK(device_exec() == kernels::Exec::parallel);
  setenv("ST_DEVICE", "tpu", 1);
  CHECK_THROWS_AS(device_exec(), BackendError);
  unsetenv("ST_DEVICE");
}

TEST_CASE("scoring is pure and batch-invariant; a random head sits near one half") {
  auto model = init_model("tiny-encoder", 5, 64);
  const std::vector<std::string> s{"the cat sat on the mat", "a", "nothing here is true", "x y z w v",
                                   "paris is the capital of france"};
  const auto a = model.score(s);
  const auto b = model.score(s);
  CHECK(a == b);
  double mean = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(a[i] >= 0.0);
    CHECK(a[i] <= 1.0);
    const auto one = model.score(std::span(s).subspan(i, 1));
    CHECK(one[0] == doctest::Approx(a[i]).epsilon(1e-5));
    mean += a[i] / s.size();
  }
  CHECK(mean > 0.35);
  CHECK(mean < 0.65);
  CHECK(model.score_chunked(s, 2).size() == s.size());
  CHECK_THROWS_AS(model.score({}), InvalidInputError);

  model.set_memory_ceiling(16);
  CHECK_THROWS_AS(model.score(s), OutOfMemoryError);
}

TEST_CASE("long statements are truncated with a counted warning") {
  auto model = init_model("tiny-encoder-small", 1, 8);
  std::vector<std::string> s{"one two three four five six seven eight nine ten", "short"};
  model.score(s);
  CHECK(model.truncation_warnings() == 1);
}

TEST_CASE("training separates a marked toy task and is reproducible") {
  const auto ds = marked_dataset(800, 3);
  std::vector<EpochLog> logs;
  TrainOptions opt;
  opt.on_epoch = [&](const EpochLog& l) { logs.push_back(l); };
  auto model = train(ds, quick_config(), "tiny-encoder-small", opt);
  REQUIRE(logs.size() == 1);
  CHECK(std::isfinite(logs[0].train_loss));
  REQUIRE(model.provenance().validation_accuracy);
  CHECK(*model.provenance().validation_accuracy >= 0.95);
  CHECK(model.provenance().dataset_digest == sha256_hex(serialize_dataset(ds)));

  auto again = train(ds, quick_config(), "tiny-encoder-small");
  const auto w1 = model.encoder().weights();
  const auto w2 = again.encoder().weights();
  CHECK(std::equal(w1.begin(), w1.end(), w2.begin(), w2.end()));
}

TEST_CASE("training rejects empty inputs") {
  StatementDataset empty;
  CHECK_THROWS_AS(train(empty, quick_config(), "tiny-encoder-small"), InvalidInputError);
  auto only_val = marked_dataset(10, 1);
  for (auto& r : only_val.records) r.split = Split::validation;
  CHECK_THROWS_AS(train(only_val, quick_config(), "tiny-encoder-small"), InvalidInputError);
}

TEST_CASE("checkpoints round-trip and corruption is detected") {
  const auto ds = marked_dataset(200, 8);
  const auto dir = scratch("ckpt");
  TrainOptions opt;
  opt.out_dir = dir;
  auto model = train(ds, quick_config(), "tiny-encoder-small", opt);
  auto loaded = load_model(dir);
  CHECK(loaded.backend_id() == "tiny-encoder-small");
  CHECK(loaded.checkpoint() == dir);
  CHECK(config_digest(loaded.provenance().config) == model.provenance().config_digest);
  const std::vector<std::string> s{"TRUEMARK river", "stone cloud paper", "glass"};
  const auto a = model.score(s), b = loaded.score(s);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-6);

  CHECK_THROWS_AS(load_model(scratch("missing")), LoadError);
  {
    std::fstream f(dir / "weights.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(40);
    f.put('\x7f');
  }
  CHECK_THROWS_AS(load_model(dir), LoadError);
  fs::remove(dir / "tokenizer.json");
  CHECK_THROWS_AS(load_model(dir), LoadError);
  fs::remove_all(dir);
}

#include "stmt/model_backend.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <new>
#include <numeric>

#include "stmt/digest.hpp"
#include "stmt/error.hpp"
#include "stmt/json_io.hpp"
#include "stmt/rng.hpp"

namespace stmt {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// TrainConfig

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidConfigError("learning_rate must be > 0");
  if (!(warmup_ratio >= 0.0 && warmup_ratio < 1.0)) throw InvalidConfigError("warmup_ratio must lie in [0, 1)");
  if (epochs == 0) throw InvalidConfigError("epochs must be >= 1");
  if (batch_size == 0) throw InvalidConfigError("batch_size must be >= 1");
  if (weight_decay < 0.0) throw InvalidConfigError("weight_decay must be >= 0");
  if (max_sequence_length < 2) throw InvalidConfigError("max_sequence_length must be >= 2");
  if (!(max_grad_norm >= 0.0)) throw InvalidConfigError("max_grad_norm must be >= 0");
}

json to_json(const TrainConfig& c) {
  json j = json::object();
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["weight_decay"] = c.weight_decay;
  j["warmup_ratio"] = c.warmup_ratio;
  j["seed"] = c.seed;
  j["max_sequence_length"] = c.max_sequence_length;
  j["early_stop_patience"] = c.early_stop_patience ? json(*c.early_stop_patience) : json(nullptr);
  j["max_grad_norm"] = c.max_grad_norm;
  return j;
}

TrainConfig train_config_from_json(const json& j, const TrainConfig& base) {
  if (!j.is_object()) throw InvalidConfigError("train config must be a JSON object");
  if (auto bad = unknown_keys(j, {"epochs", "batch_size", "learning_rate", "weight_decay", "warmup_ratio", "seed",
                                  "max_sequence_length", "early_stop_patience", "max_grad_norm"});
      !bad.empty()) {
    throw InvalidConfigError("train config: unknown key '" + bad.front() + "'");
  }
  TrainConfig c = base;
  try {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.warmup_ratio = j.value("warmup_ratio", c.warmup_ratio);
    c.seed = j.value("seed", c.seed);
    c.max_sequence_length = j.value("max_sequence_length", c.max_sequence_length);
    if (j.contains("early_stop_patience")) {
      const auto& p = j["early_stop_patience"];
      c.early_stop_patience = p.is_null() ? std::nullopt : std::optional<std::size_t>(p.get<std::size_t>());
    }
    c.max_grad_norm = j.value("max_grad_norm", c.max_grad_norm);
  } catch (const json::exception& e) {
    throw InvalidConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string config_digest(const TrainConfig& c) { return sha256_hex(to_json(c).dump()); }

// ---------------------------------------------------------------------------
// Backends

namespace {

const std::vector<BackendInfo>& registry() {
  static const std::vector<BackendInfo> list = {
      {"tiny-encoder", "bundled 2-layer encoder, d=64, hashed word vocabulary of 16384",
       EncoderDims{16384, 64, 4, 2, 256, 256}},
      {"tiny-encoder-small", "bundled 1-layer encoder, d=32, hashed word vocabulary of 4096",
       EncoderDims{4096, 32, 2, 1, 64, 256}},
      {"mdeberta-v3-base", "microsoft/mdeberta-v3-base (weights not bundled)", std::nullopt},
      {"bert-base-multilingual-cased", "google-bert/bert-base-multilingual-cased (weights not bundled)",
       std::nullopt},
      {"xlm-roberta-base", "FacebookAI/xlm-roberta-base (weights not bundled)", std::nullopt},
      {"xlm-roberta-large", "FacebookAI/xlm-roberta-large (weights not bundled)", std::nullopt},
  };
  return list;
}

}  // namespace

std::vector<BackendInfo> backends() { return registry(); }

const BackendInfo& backend_info(std::string_view id) {
  for (const auto& b : registry()) {
    if (b.id == id) return b;
  }
  throw BackendError("unknown backend '" + std::string(id) + "'");
}

TrainConfig train_preset(std::string_view backend_id) {
  auto recipe = [](std::size_t epochs, std::size_t batch, double lr, double wd, double warmup) {
    TrainConfig c;
    c.epochs = epochs;
    c.batch_size = batch;
    c.learning_rate = lr;
    c.weight_decay = wd;
    c.warmup_ratio = warmup;
    return c;
  };
  TrainConfig c;
  if (backend_id == "mdeberta-v3-base" || backend_id == "xlm-roberta-large") {
    c = recipe(15, 16, 2e-6, 0.1, 0.1);
  } else if (backend_id == "bert-base-multilingual-cased") {
    c = recipe(20, 16, 1e-6, 0.1, 0.1);
  } else if (backend_id == "xlm-roberta-base") {
    c = recipe(15, 16, 1e-6, 0.1, 0.1);
  } else if (backend_id == "tiny-encoder" || backend_id == "tiny-encoder-small") {
    c = recipe(16, 32, 3e-3, 0.01, 0.1);
  } else {
    throw BackendError("unknown backend '" + std::string(backend_id) + "'");
  }
  return c;
}

kernels::Exec device_exec() {
  const char* env = std::getenv("ST_DEVICE");
  const std::string v = env ? env : "";
  if (v == "cpu") return kernels::Exec::serial;
  if (v == "omp") return kernels::Exec::parallel;
  if (v.empty() || v == "auto") return omp_get_max_threads() > 1 ? kernels::Exec::parallel : kernels::Exec::serial;
  throw BackendError("ST_DEVICE='" + v + "' is not one of cpu, omp, auto");
}

std::string device_descriptor(kernels::Exec ex) {
  if (ex == kernels::Exec::serial) return "cpu (serial kernels)";
  return "cpu (OpenMP kernels, " + std::to_string(omp_get_max_threads()) + " threads)";
}

// ---------------------------------------------------------------------------
// Provenance

json to_json(const Provenance& p) {
  json j = json::object();
  j["backend_id"] = p.backend_id;
  j["config"] = to_json(p.config);
  j["config_digest"] = p.config_digest;
  j["dataset_digest"] = p.dataset_digest;
  j["seed"] = p.seed;
  j["validation_accuracy"] = p.validation_accuracy ? json(*p.validation_accuracy) : json(nullptr);
  j["epochs_run"] = p.epochs_run;
  j["best_epoch"] = p.best_epoch;
  return j;
}

Provenance provenance_from_json(const json& j) {
  Provenance p;
  p.backend_id = j.at("backend_id").get<std::string>();
  p.config = train_config_from_json(j.at("config"));
  p.config_digest = j.at("config_digest").get<std::string>();
  p.dataset_digest = j.at("dataset_digest").get<std::string>();
  p.seed = j.at("seed").get<std::uint64_t>();
  if (!j.at("validation_accuracy").is_null()) p.validation_accuracy = j["validation_accuracy"].get<double>();
  p.epochs_run = j.at("epochs_run").get<std::size_t>();
  p.best_epoch = j.at("best_epoch").get<std::size_t>();
  return p;
}

// ---------------------------------------------------------------------------
// ModelHandle

ModelHandle::ModelHandle(std::string backend_id, Encoder encoder, HashedTokenizer tokenizer, Provenance provenance)
    : backend_id_(std::move(backend_id)),
      encoder_(std::move(encoder)),
      tokenizer_(tokenizer),
      provenance_(std::move(provenance)),
      exec_(device_exec()),
      truncations_(std::make_shared<std::atomic<std::size_t>>(0)) {}

TokenBatch ModelHandle::tokenize(std::span<const std::string> statements) const {
  TokenBatch batch;
  std::size_t cut = 0;
  for (const auto& s : statements) {
    bool truncated = false;
    batch.add(tokenizer_.encode(s, &truncated));
    cut += truncated ? 1 : 0;
  }
  if (cut) truncations_->fetch_add(cut);
  return batch;
}

std::vector<double> ModelHandle::score(std::span<const std::string> statements) {
  if (statements.empty()) throw InvalidInputError("score: empty statement list");
  const auto batch = tokenize(statements);
  if (memory_ceiling_ && encoder_.activation_bytes(batch) > *memory_ceiling_) {
    throw OutOfMemoryError("batch of " + std::to_string(statements.size()) + " statements needs " +
                           std::to_string(encoder_.activation_bytes(batch)) + " bytes, ceiling is " +
                           std::to_string(*memory_ceiling_));
  }
  std::vector<float> logits;
  try {
    logits = encoder_.logits(batch, exec_);
  } catch (const std::bad_alloc&) {
    throw OutOfMemoryError("allocation failed for a batch of " + std::to_string(statements.size()));
  }
  std::vector<double> out(statements.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = true_probability(logits[2 * i], logits[2 * i + 1]);
  return out;
}

std::vector<double> ModelHandle::score_chunked(std::span<const std::string> statements, std::size_t chunk) {
  std::vector<double> out;
  out.reserve(statements.size());
  for (std::size_t i = 0; i < statements.size(); i += chunk) {
    const auto part = score(statements.subspan(i, std::min(chunk, statements.size() - i)));
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::string ModelHandle::descriptor() const { return backend_id_ + " on " + device_descriptor(exec_); }

ModelHandle init_model(std::string_view backend_id, std::uint64_t seed, std::size_t max_sequence_length) {
  const auto& info = backend_info(backend_id);
  if (!info.dims) {
    throw BackendError("backend '" + info.id + "' cannot be loaded: " + info.description +
                       "; use tiny-encoder or tiny-encoder-small");
  }
  auto dims = *info.dims;
  dims.max_len = max_sequence_length;
  Encoder enc(dims);
  enc.initialize(seed);
  Provenance p;
  p.backend_id = info.id;
  p.seed = seed;
  p.config = train_preset(info.id);
  p.config.seed = seed;
  p.config.max_sequence_length = max_sequence_length;
  p.config_digest = config_digest(p.config);
  return ModelHandle(info.id, std::move(enc), HashedTokenizer(dims.vocab, max_sequence_length), std::move(p));
}

// ---------------------------------------------------------------------------
// Training

double statement_accuracy(ModelHandle& model, std::span<const StatementRecord* const> records) {
  if (records.empty()) return 0.0;
  std::vector<std::string> texts;
  texts.reserve(records.size());
  for (const auto* r : records) texts.push_back(r->statement);
  const auto probs = model.score_chunked(texts, 256);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < records.size(); ++i) correct += (probs[i] >= 0.5) == records[i]->truth ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

ModelHandle train(const StatementDataset& dataset, const TrainConfig& config, std::string_view backend_id,
                  const TrainOptions& options) {
  config.validate();
  if (dataset.records.empty()) throw InvalidInputError("train: dataset has no records");
  const auto train_set = dataset.split(Split::train);
  const auto val_set = dataset.split(Split::validation);
  if (train_set.empty()) throw InvalidInputError("train: dataset has no training records");

  ModelHandle model = init_model(backend_id, config.seed, config.max_sequence_length);
  Encoder& enc = model.mutable_encoder();
  const auto ex = model.exec();

  // Tokenize once.
  std::vector<std::vector<std::int32_t>> tokens(train_set.size());
  std::vector<int> labels(train_set.size());
  std::size_t cut = 0;
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    bool truncated = false;
    tokens[i] = model.tokenizer().encode(train_set[i]->statement, &truncated);
    cut += truncated;
    labels[i] = train_set[i]->truth ? 1 : 0;
  }
  (void)cut;

  const std::size_t n = train_set.size();
  const std::size_t steps_per_epoch = (n + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = steps_per_epoch * config.epochs;
  const auto warmup = static_cast<std::size_t>(std::floor(config.warmup_ratio * static_cast<double>(total_steps)));
  auto lr_at = [&](std::size_t step) {
    if (step < warmup) return config.learning_rate * static_cast<double>(step + 1) / static_cast<double>(warmup);
    const double rest = static_cast<double>(total_steps - warmup);
    return config.learning_rate * std::max(0.0, static_cast<double>(total_steps - step) / rest);
  };

  const std::size_t P = enc.parameter_count();
  std::vector<float> grad(P), m(P, 0.0f), v(P, 0.0f);
  std::vector<float> best = std::vector<float>(enc.weights().begin(), enc.weights().end());
  std::optional<double> best_acc;
  std::size_t best_epoch = 0, since_best = 0, epochs_run = 0;
  std::size_t step = 0;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    if (epoch > 1) {
      std::iota(order.begin(), order.end(), 0);
      Rng(derive_seed(config.seed, "epoch", std::to_string(epoch))).shuffle(order);
    }
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < n; b += config.batch_size) {
      const std::size_t e = std::min(n, b + config.batch_size);
      TokenBatch batch;
      std::vector<int> y;
      for (std::size_t i = b; i < e; ++i) {
        batch.add(tokens[order[i]]);
        y.push_back(labels[order[i]]);
      }
      std::fill(grad.begin(), grad.end(), 0.0f);
      loss_sum += enc.loss_and_grad(batch, y, grad, ex) * static_cast<double>(e - b);
      if (config.max_grad_norm > 0.0) {
        double sq = 0.0;
        for (float g : grad) sq += static_cast<double>(g) * g;
        const double norm = std::sqrt(sq);
        if (norm > config.max_grad_norm) {
          const auto s = static_cast<float>(config.max_grad_norm / norm);
          for (auto& g : grad) g *= s;
        }
      }
      const auto lr = static_cast<float>(lr_at(step));
      ++step;
      for (const auto& t : enc.tensors()) {
        kernels::adamw_step(ex, enc.weights().data() + t.offset, grad.data() + t.offset, m.data() + t.offset,
                            v.data() + t.offset, t.size, lr, 0.9f, 0.999f, 1e-8f,
                            t.decay ? static_cast<float>(config.weight_decay) : 0.0f, static_cast<long>(step));
      }
    }
    epochs_run = epoch;
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_sum / static_cast<double>(n);
    if (!val_set.empty()) {
      const double acc = statement_accuracy(model, val_set);
      log.validation_accuracy = acc;
      if (!best_acc || acc > *best_acc) {
        best_acc = acc;
        best_epoch = epoch;
        best.assign(enc.weights().begin(), enc.weights().end());
        since_best = 0;
        log.improved = true;
      } else {
        ++since_best;
      }
    } else {
      best.assign(enc.weights().begin(), enc.weights().end());
      best_epoch = epoch;
      log.improved = true;
    }
    if (options.on_epoch) options.on_epoch(log);
    if (config.early_stop_patience && since_best >= *config.early_stop_patience) break;
  }
  std::copy(best.begin(), best.end(), enc.weights().begin());

  Provenance p;
  p.backend_id = model.backend_id();
  p.config = config;
  p.config_digest = config_digest(config);
  p.dataset_digest = sha256_hex(serialize_dataset(dataset));
  p.seed = config.seed;
  p.validation_accuracy = best_acc;
  p.epochs_run = epochs_run;
  p.best_epoch = best_epoch;
  ModelHandle out(model.backend_id(), enc, model.tokenizer(), std::move(p));
  if (options.out_dir) save_model(out, *options.out_dir);
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

constexpr char kMagic[8] = {'S', 'T', 'M', 'T', 'W', 'T', 'S', '1'};

std::string weights_blob(std::span<const float> w) {
  std::string blob(sizeof kMagic + sizeof(std::uint64_t) + w.size() * sizeof(float), '\0');
  std::memcpy(blob.data(), kMagic, sizeof kMagic);
  const std::uint64_t n = w.size();
  std::memcpy(blob.data() + sizeof kMagic, &n, sizeof n);
  std::memcpy(blob.data() + sizeof kMagic + sizeof n, w.data(), w.size() * sizeof(float));
  return blob;
}

json read_json(const fs::path& p) {
  try {
    return json::parse(read_file(p));
  } catch (const json::parse_error& e) {
    throw LoadError("corrupt checkpoint file '" + p.string() + "': " + e.what());
  }
}

}  // namespace

void save_model(const ModelHandle& model, const fs::path& dir) {
  fs::create_directories(dir);
  const auto blob = weights_blob(model.encoder().weights());
  write_file(dir / "weights.bin", blob);
  json mj = {{"format_version", 1},
             {"backend_id", model.backend_id()},
             {"dims", to_json(model.encoder().dims())},
             {"parameter_count", model.encoder().parameter_count()},
             {"weights_sha256", sha256_hex(blob)}};
  write_file(dir / "model.json", mj.dump(2) + "\n");
  write_file(dir / "tokenizer.json", model.tokenizer().to_json().dump(2) + "\n");
  write_file(dir / "provenance.json", to_json(model.provenance()).dump(2) + "\n");
}

ModelHandle load_model(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw LoadError("checkpoint directory not found: " + dir.string());
  for (const char* f : {"weights.bin", "model.json", "tokenizer.json", "provenance.json"}) {
    if (!fs::exists(dir / f)) throw LoadError("checkpoint '" + dir.string() + "' lacks " + f);
  }
  const json mj = read_json(dir / "model.json");
  const std::string blob = read_file(dir / "weights.bin");
  try {
    if (mj.at("format_version").get<int>() != 1) throw LoadError("unsupported checkpoint format");
    if (sha256_hex(blob) != mj.at("weights_sha256").get<std::string>()) {
      throw LoadError("checkpoint '" + dir.string() + "': weights.bin does not match its digest");
    }
    const auto dims = encoder_dims_from_json(mj.at("dims"));
    Encoder enc(dims);
    std::uint64_t n = 0;
    if (blob.size() < sizeof kMagic + sizeof n || std::memcmp(blob.data(), kMagic, sizeof kMagic) != 0) {
      throw LoadError("checkpoint '" + dir.string() + "': bad weights header");
    }
    std::memcpy(&n, blob.data() + sizeof kMagic, sizeof n);
    if (n != enc.parameter_count() || blob.size() != sizeof kMagic + sizeof n + n * sizeof(float)) {
      throw LoadError("checkpoint '" + dir.string() + "': weight count mismatch");
    }
    std::memcpy(enc.weights().data(), blob.data() + sizeof kMagic + sizeof n, n * sizeof(float));
    auto tok = HashedTokenizer::from_json(read_json(dir / "tokenizer.json"));
    auto prov = provenance_from_json(read_json(dir / "provenance.json"));
    ModelHandle h(mj.at("backend_id").get<std::string>(), std::move(enc), tok, std::move(prov));
    h.set_checkpoint(dir);
    return h;
  } catch (const json::exception& e) {
    throw LoadError("corrupt checkpoint '" + dir.string() + "': " + e.what());
  } catch (const InvalidConfigError& e) {
    throw LoadError("corrupt checkpoint '" + dir.string() + "': " + e.what());
  }
}

}  // namespace stmt

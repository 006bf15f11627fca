#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "stmt/encoder.hpp"
#include "stmt/statement_builder.hpp"

namespace stmt {

struct TrainConfig {
  std::size_t epochs = 3;
  std::size_t batch_size = 16;
  double learning_rate = 5e-4;
  double weight_decay = 0.01;
  double warmup_ratio = 0.1;
  std::uint64_t seed = 0;
  std::size_t max_sequence_length = 256;
  std::optional<std::size_t> early_stop_patience;
  double max_grad_norm = 1.0;

  // Throws InvalidConfigError.
  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
// Unknown keys are rejected (InvalidConfigError); absent keys keep `base`.
TrainConfig train_config_from_json(const nlohmann::json& j, const TrainConfig& base = {});
std::string config_digest(const TrainConfig& c);

// Fine-tuning recipe for a backend id. The four paper encoders carry their
// published settings; the bundled tiny encoders carry desk-scale ones.
TrainConfig train_preset(std::string_view backend_id);

struct BackendInfo {
  std::string id;
  std::string description;
  std::optional<EncoderDims> dims;  // empty for ids without bundled weights
};
std::vector<BackendInfo> backends();
const BackendInfo& backend_info(std::string_view id);  // throws BackendError

// ST_DEVICE: "cpu" -> serial kernels, "omp" -> OpenMP kernels, unset or
// "auto" -> OpenMP when more than one thread is available.
kernels::Exec device_exec();
std::string device_descriptor(kernels::Exec ex);

// Anything that maps statements to true-probabilities.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::vector<double> score(std::span<const std::string> statements) = 0;
  // Blocks until queued device work finished. CPU backends return at once.
  virtual void synchronize() {}
  virtual std::string descriptor() const { return "scorer"; }
};

struct Provenance {
  std::string backend_id;
  TrainConfig config;
  std::string config_digest;
  std::string dataset_digest;
  std::uint64_t seed = 0;
  std::optional<double> validation_accuracy;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
};

nlohmann::json to_json(const Provenance& p);
Provenance provenance_from_json(const nlohmann::json& j);

class ModelHandle : public Scorer {
 public:
  ModelHandle(std::string backend_id, Encoder encoder, HashedTokenizer tokenizer, Provenance provenance);

  // One forward pass over the whole list, so a list is one batch.
  std::vector<double> score(std::span<const std::string> statements) override;
  std::vector<double> score_chunked(std::span<const std::string> statements, std::size_t chunk);
  std::string descriptor() const override;

  const std::string& backend_id() const { return backend_id_; }
  const Encoder& encoder() const { return encoder_; }
  Encoder& mutable_encoder() { return encoder_; }
  const HashedTokenizer& tokenizer() const { return tokenizer_; }
  const Provenance& provenance() const { return provenance_; }
  const std::filesystem::path& checkpoint() const { return checkpoint_; }
  void set_checkpoint(std::filesystem::path p) { checkpoint_ = std::move(p); }

  std::size_t truncation_warnings() const { return truncations_->load(); }

  // Batches whose activation estimate exceeds the ceiling raise
  // OutOfMemoryError, as would a device allocation failure.
  void set_memory_ceiling(std::optional<std::size_t> bytes) { memory_ceiling_ = bytes; }
  std::optional<std::size_t> memory_ceiling() const { return memory_ceiling_; }
  void set_exec(kernels::Exec ex) { exec_ = ex; }
  kernels::Exec exec() const { return exec_; }

  TokenBatch tokenize(std::span<const std::string> statements) const;

 private:
  std::string backend_id_;
  Encoder encoder_;
  HashedTokenizer tokenizer_;
  Provenance provenance_;
  std::filesystem::path checkpoint_;
  std::optional<std::size_t> memory_ceiling_;
  kernels::Exec exec_;
  std::shared_ptr<std::atomic<std::size_t>> truncations_;
};

// Randomly initialized model of a bundled backend.
ModelHandle init_model(std::string_view backend_id, std::uint64_t seed, std::size_t max_sequence_length = 256);

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::optional<double> validation_accuracy;
  bool improved = false;
};

struct TrainOptions {
  std::optional<std::filesystem::path> out_dir;  // checkpoint written here when set
  std::function<void(const EpochLog&)> on_epoch;
};

// Fine-tunes a fresh model. Epoch 1 visits training records in dataset
// order (the builder's seeded permutation); later epochs use a permutation
// seeded by config.seed. The weights of the epoch with the best validation
// accuracy are kept.
ModelHandle train(const StatementDataset& dataset, const TrainConfig& config, std::string_view backend_id,
                  const TrainOptions& options = {});

// Fraction of records whose thresholded probability matches the truth bit.
double statement_accuracy(ModelHandle& model, std::span<const StatementRecord* const> records);

// Directory with weights.bin, model.json, tokenizer.json, provenance.json.
void save_model(const ModelHandle& model, const std::filesystem::path& dir);
ModelHandle load_model(const std::filesystem::path& dir);

}  // namespace stmt

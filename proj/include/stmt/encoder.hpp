#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "stmt/kernels.hpp"

namespace stmt {

// Language-agnostic word-level tokenizer: words are hashed into a fixed
// number of buckets, punctuation marks become their own tokens. Id 0 is
// padding, id 1 the leading [CLS] token.
class HashedTokenizer {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kCls = 1;

  HashedTokenizer() = default;
  HashedTokenizer(std::size_t vocab_size, std::size_t max_sequence_length)
      : vocab_size_(vocab_size), max_len_(max_sequence_length) {}

  // [CLS] + word ids, cut to max_sequence_length keeping the head.
  std::vector<std::int32_t> encode(std::string_view text, bool* truncated = nullptr) const;
  std::vector<std::string> split(std::string_view text) const;

  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t max_sequence_length() const { return max_len_; }

  nlohmann::json to_json() const;
  static HashedTokenizer from_json(const nlohmann::json& j);

 private:
  std::size_t vocab_size_ = 16384;
  std::size_t max_len_ = 256;
};

struct EncoderDims {
  std::size_t vocab = 16384;
  std::size_t d = 64;
  std::size_t heads = 4;
  std::size_t layers = 2;
  std::size_t ffn = 256;
  std::size_t max_len = 256;

  bool operator==(const EncoderDims&) const = default;
};

nlohmann::json to_json(const EncoderDims& d);
EncoderDims encoder_dims_from_json(const nlohmann::json& j);

// Packed batch: all sequences concatenated, offsets[s]..offsets[s+1].
struct TokenBatch {
  std::vector<std::int32_t> ids;
  std::vector<std::size_t> offsets{0};

  std::size_t size() const { return offsets.size() - 1; }
  std::size_t tokens() const { return ids.size(); }
  void add(std::span<const std::int32_t> seq);
};

// Pre-LN transformer encoder with mean pooling and a two-way head. All
// parameters live in one flat float buffer.
class Encoder {
 public:
  struct Tensor {
    std::string name;
    std::size_t offset;
    std::size_t size;
    bool decay;  // weight decay applies (matrices and embeddings only)
  };

  Encoder() = default;
  explicit Encoder(const EncoderDims& dims);

  // N(0, 0.02) matrices, unit LayerNorm gains, zero biases.
  void initialize(std::uint64_t seed);

  const EncoderDims& dims() const { return dims_; }
  std::span<float> weights() { return weights_; }
  std::span<const float> weights() const { return weights_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }
  std::size_t parameter_count() const { return weights_.size(); }

  // Logits, batch x 2 row-major.
  std::vector<float> logits(const TokenBatch& batch, kernels::Exec ex) const;
  // Mean cross-entropy over the batch; gradient is accumulated into `grad`.
  float loss_and_grad(const TokenBatch& batch, std::span<const int> labels, std::span<float> grad,
                      kernels::Exec ex) const;
  float loss(const TokenBatch& batch, std::span<const int> labels, kernels::Exec ex) const;

  // Activation memory of one forward pass with caches, in bytes.
  std::size_t activation_bytes(const TokenBatch& batch) const;

 private:
  struct Layer {
    std::size_t ln1_g, ln1_b, wqkv, bqkv, wo, bo, ln2_g, ln2_b, w1, b1, w2, b2;
  };
  struct Cache;

  std::size_t add_tensor(const std::string& name, std::size_t size, bool decay);
  void forward(const TokenBatch& batch, Cache& c, kernels::Exec ex) const;

  EncoderDims dims_;
  std::vector<float> weights_;
  std::vector<Tensor> tensors_;
  std::size_t tok_emb_ = 0, pos_emb_ = 0, lnf_g_ = 0, lnf_b_ = 0, head_w_ = 0, head_b_ = 0;
  std::vector<Layer> layers_;
};

// Probability of class 1 from a pair of logits.
float true_probability(float logit_false, float logit_true);

}  // namespace stmt

#include "stmt/encoder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "stmt/error.hpp"
#include "stmt/rng.hpp"

namespace stmt {

using nlohmann::json;
namespace k = kernels;

// ---------------------------------------------------------------------------
// Tokenizer

std::vector<std::string> HashedTokenizer::split(std::string_view text) const {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c >= 0x80 || std::isalnum(c) || c == '_') {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (std::isspace(c)) {
      flush();
    } else {
      flush();
      out.emplace_back(1, ch);
    }
  }
  flush();
  return out;
}

std::vector<std::int32_t> HashedTokenizer::encode(std::string_view text, bool* truncated) const {
  std::vector<std::int32_t> ids{kCls};
  const std::uint64_t buckets = vocab_size_ - 2;
  for (const auto& w : split(text)) ids.push_back(static_cast<std::int32_t>(2 + fnv1a64(w) % buckets));
  const bool cut = ids.size() > max_len_;
  if (cut) ids.resize(max_len_);
  if (truncated) *truncated = cut;
  return ids;
}

json HashedTokenizer::to_json() const {
  return {{"kind", "hashed-word"}, {"vocab_size", vocab_size_}, {"max_sequence_length", max_len_},
          {"lowercase", true}, {"hash", "fnv1a64"}};
}

HashedTokenizer HashedTokenizer::from_json(const json& j) {
  if (j.value("kind", std::string()) != "hashed-word") throw LoadError("unsupported tokenizer kind");
  return HashedTokenizer(j.at("vocab_size").get<std::size_t>(), j.at("max_sequence_length").get<std::size_t>());
}

json to_json(const EncoderDims& d) {
  return {{"vocab", d.vocab}, {"d", d.d},     {"heads", d.heads},
          {"layers", d.layers}, {"ffn", d.ffn}, {"max_len", d.max_len}};
}

EncoderDims encoder_dims_from_json(const json& j) {
  EncoderDims d;
  d.vocab = j.at("vocab").get<std::size_t>();
  d.d = j.at("d").get<std::size_t>();
  d.heads = j.at("heads").get<std::size_t>();
  d.layers = j.at("layers").get<std::size_t>();
  d.ffn = j.at("ffn").get<std::size_t>();
  d.max_len = j.at("max_len").get<std::size_t>();
  return d;
}

void TokenBatch::add(std::span<const std::int32_t> seq) {
  ids.insert(ids.end(), seq.begin(), seq.end());
  offsets.push_back(ids.size());
}

float true_probability(float logit_false, float logit_true) {
  // softmax([a, b])[1] = 1 / (1 + exp(a - b))
  return 1.0f / (1.0f + std::exp(logit_false - logit_true));
}

// ---------------------------------------------------------------------------
// Encoder

std::size_t Encoder::add_tensor(const std::string& name, std::size_t size, bool decay) {
  const std::size_t off = tensors_.empty() ? 0 : tensors_.back().offset + tensors_.back().size;
  tensors_.push_back({name, off, size, decay});
  return off;
}

Encoder::Encoder(const EncoderDims& dims) : dims_(dims) {
  if (dims.d == 0 || dims.heads == 0 || dims.d % dims.heads != 0) {
    throw BackendError("encoder: d must be a positive multiple of heads");
  }
  if (dims.vocab < 3 || dims.max_len < 1) throw BackendError("encoder: vocab >= 3 and max_len >= 1 required");
  const std::size_t d = dims.d;
  const std::size_t f = dims.ffn;
  tok_emb_ = add_tensor("tok_emb", dims.vocab * d, true);
  pos_emb_ = add_tensor("pos_emb", dims.max_len * d, true);
  for (std::size_t l = 0; l < dims.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    Layer L{};
    L.ln1_g = add_tensor(p + "ln1.g", d, false);
    L.ln1_b = add_tensor(p + "ln1.b", d, false);
    L.wqkv = add_tensor(p + "attn.wqkv", 3 * d * d, true);
    L.bqkv = add_tensor(p + "attn.bqkv", 3 * d, false);
    L.wo = add_tensor(p + "attn.wo", d * d, true);
    L.bo = add_tensor(p + "attn.bo", d, false);
    L.ln2_g = add_tensor(p + "ln2.g", d, false);
    L.ln2_b = add_tensor(p + "ln2.b", d, false);
    L.w1 = add_tensor(p + "ffn.w1", f * d, true);
    L.b1 = add_tensor(p + "ffn.b1", f, false);
    L.w2 = add_tensor(p + "ffn.w2", d * f, true);
    L.b2 = add_tensor(p + "ffn.b2", d, false);
    layers_.push_back(L);
  }
  lnf_g_ = add_tensor("lnf.g", d, false);
  lnf_b_ = add_tensor("lnf.b", d, false);
  head_w_ = add_tensor("head.w", 2 * d, true);
  head_b_ = add_tensor("head.b", 2, false);
  weights_.assign(tensors_.back().offset + tensors_.back().size, 0.0f);
}

void Encoder::initialize(std::uint64_t seed) {
  Rng rng(derive_seed(seed, "encoder-init"));
  for (const auto& t : tensors_) {
    float* p = weights_.data() + t.offset;
    const bool gain = t.name.size() > 2 && t.name.compare(t.name.size() - 2, 2, ".g") == 0;
    for (std::size_t i = 0; i < t.size; ++i) {
      if (t.decay) {
        p[i] = static_cast<float>(0.02 * rng.normal());
      } else {
        p[i] = gain ? 1.0f : 0.0f;
      }
    }
  }
}

struct Encoder::Cache {
  struct LayerCache {
    std::vector<float> x_in, h1, mean1, rstd1, qkv, P, attn, x_mid, h2, mean2, rstd2, f_pre, f_act;
  };
  std::vector<float> x0;
  std::vector<LayerCache> layers;
  std::vector<float> x_last, xf, meanf, rstdf, pooled, logits;
};

namespace {

void check_batch(const TokenBatch& b, const EncoderDims& dims) {
  for (std::size_t s = 0; s < b.size(); ++s) {
    const std::size_t len = b.offsets[s + 1] - b.offsets[s];
    if (len == 0) throw InvalidInputError("encoder: empty sequence in batch");
    if (len > dims.max_len) throw InvalidInputError("encoder: sequence longer than max_len");
  }
  for (auto id : b.ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= dims.vocab) throw InvalidInputError("encoder: token id out of range");
  }
}

}  // namespace

void Encoder::forward(const TokenBatch& batch, Cache& c, k::Exec ex) const {
  check_batch(batch, dims_);
  const std::size_t T = batch.tokens();
  const std::size_t B = batch.size();
  const std::size_t d = dims_.d;
  const std::size_t f = dims_.ffn;
  const float* W = weights_.data();

  c.x0.assign(T * d, 0.0f);
  for (std::size_t s = 0; s < B; ++s) {
    for (std::size_t t = batch.offsets[s]; t < batch.offsets[s + 1]; ++t) {
      const float* te = W + tok_emb_ + static_cast<std::size_t>(batch.ids[t]) * d;
      const float* pe = W + pos_emb_ + (t - batch.offsets[s]) * d;
      float* x = c.x0.data() + t * d;
      for (std::size_t i = 0; i < d; ++i) x[i] = te[i] + pe[i];
    }
  }

  c.layers.resize(layers_.size());
  const std::vector<float>* x = &c.x0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& L = layers_[l];
    auto& lc = c.layers[l];
    lc.x_in = *x;
    lc.h1.resize(T * d);
    lc.mean1.resize(T);
    lc.rstd1.resize(T);
    k::layernorm_forward(ex, lc.x_in.data(), T, d, W + L.ln1_g, W + L.ln1_b, lc.h1.data(), lc.mean1.data(),
                         lc.rstd1.data());
    lc.qkv.resize(T * 3 * d);
    k::linear_forward(ex, lc.h1.data(), T, d, W + L.wqkv, W + L.bqkv, 3 * d, lc.qkv.data());
    lc.P.resize(k::attention_cache_size(batch.offsets, dims_.heads));
    lc.attn.resize(T * d);
    k::attention_forward(ex, lc.qkv.data(), batch.offsets, d, dims_.heads, lc.attn.data(), lc.P.data());
    lc.x_mid.resize(T * d);
    k::linear_forward(ex, lc.attn.data(), T, d, W + L.wo, W + L.bo, d, lc.x_mid.data());
    for (std::size_t i = 0; i < T * d; ++i) lc.x_mid[i] += lc.x_in[i];
    lc.h2.resize(T * d);
    lc.mean2.resize(T);
    lc.rstd2.resize(T);
    k::layernorm_forward(ex, lc.x_mid.data(), T, d, W + L.ln2_g, W + L.ln2_b, lc.h2.data(), lc.mean2.data(),
                         lc.rstd2.data());
    lc.f_pre.resize(T * f);
    k::linear_forward(ex, lc.h2.data(), T, d, W + L.w1, W + L.b1, f, lc.f_pre.data());
    lc.f_act.resize(T * f);
    k::gelu_forward(ex, lc.f_pre.data(), T * f, lc.f_act.data());
    // x_out = x_mid + ffn; stored as next layer's x_in (or x_last).
    std::vector<float>& next = (l + 1 < layers_.size()) ? c.layers[l + 1].x_in : c.x_last;
    next.resize(T * d);
    k::linear_forward(ex, lc.f_act.data(), T, f, W + L.w2, W + L.b2, d, next.data());
    for (std::size_t i = 0; i < T * d; ++i) next[i] += lc.x_mid[i];
    x = &next;
  }
  if (layers_.empty()) c.x_last = c.x0;

  c.xf.resize(T * d);
  c.meanf.resize(T);
  c.rstdf.resize(T);
  k::layernorm_forward(ex, c.x_last.data(), T, d, W + lnf_g_, W + lnf_b_, c.xf.data(), c.meanf.data(),
                       c.rstdf.data());
  c.pooled.assign(B * d, 0.0f);
  for (std::size_t s = 0; s < B; ++s) {
    const std::size_t len = batch.offsets[s + 1] - batch.offsets[s];
    float* p = c.pooled.data() + s * d;
    for (std::size_t t = batch.offsets[s]; t < batch.offsets[s + 1]; ++t) {
      for (std::size_t i = 0; i < d; ++i) p[i] += c.xf[t * d + i];
    }
    const float inv = 1.0f / static_cast<float>(len);
    for (std::size_t i = 0; i < d; ++i) p[i] *= inv;
  }
  c.logits.resize(B * 2);
  k::linear_forward(ex, c.pooled.data(), B, d, W + head_w_, W + head_b_, 2, c.logits.data());
}

std::vector<float> Encoder::logits(const TokenBatch& batch, k::Exec ex) const {
  Cache c;
  forward(batch, c, ex);
  return std::move(c.logits);
}

namespace {

float cross_entropy(const std::vector<float>& logits, std::span<const int> labels, std::vector<float>* dlogits) {
  const std::size_t B = labels.size();
  double total = 0.0;
  if (dlogits) dlogits->assign(B * 2, 0.0f);
  for (std::size_t s = 0; s < B; ++s) {
    const float a = logits[2 * s];
    const float b = logits[2 * s + 1];
    const float m = std::max(a, b);
    const float lse = m + std::log(std::exp(a - m) + std::exp(b - m));
    total += lse - (labels[s] ? b : a);
    if (dlogits) {
      const float p1 = std::exp(b - lse);
      const float p0 = std::exp(a - lse);
      (*dlogits)[2 * s] = (p0 - (labels[s] ? 0.0f : 1.0f)) / static_cast<float>(B);
      (*dlogits)[2 * s + 1] = (p1 - (labels[s] ? 1.0f : 0.0f)) / static_cast<float>(B);
    }
  }
  return static_cast<float>(total / static_cast<double>(B));
}

}  // namespace

float Encoder::loss(const TokenBatch& batch, std::span<const int> labels, k::Exec ex) const {
  if (labels.size() != batch.size()) throw InvalidInputError("encoder: label count mismatch");
  return cross_entropy(logits(batch, ex), labels, nullptr);
}

float Encoder::loss_and_grad(const TokenBatch& batch, std::span<const int> labels, std::span<float> grad,
                             k::Exec ex) const {
  if (labels.size() != batch.size()) throw InvalidInputError("encoder: label count mismatch");
  if (grad.size() != weights_.size()) throw InvalidInputError("encoder: gradient buffer size mismatch");
  Cache c;
  forward(batch, c, ex);
  std::vector<float> dlogits;
  const float loss = cross_entropy(c.logits, labels, &dlogits);

  const std::size_t T = batch.tokens();
  const std::size_t B = batch.size();
  const std::size_t d = dims_.d;
  const std::size_t f = dims_.ffn;
  const float* W = weights_.data();
  float* G = grad.data();

  std::vector<float> dpooled(B * d);
  k::linear_backward_params(ex, c.pooled.data(), dlogits.data(), B, d, 2, G + head_w_, G + head_b_);
  k::linear_backward_input(ex, dlogits.data(), B, 2, W + head_w_, d, dpooled.data());

  std::vector<float> dxf(T * d);
  for (std::size_t s = 0; s < B; ++s) {
    const std::size_t len = batch.offsets[s + 1] - batch.offsets[s];
    const float inv = 1.0f / static_cast<float>(len);
    for (std::size_t t = batch.offsets[s]; t < batch.offsets[s + 1]; ++t) {
      for (std::size_t i = 0; i < d; ++i) dxf[t * d + i] = dpooled[s * d + i] * inv;
    }
  }
  std::vector<float> dx(T * d);
  k::layernorm_backward(ex, dxf.data(), c.x_last.data(), c.meanf.data(), c.rstdf.data(), W + lnf_g_, T, d,
                        dx.data(), G + lnf_g_, G + lnf_b_);

  std::vector<float> tmp_d(T * d), tmp_f(T * f), tmp_f2(T * f), dqkv(T * 3 * d), dattn(T * d);
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const auto& L = layers_[li];
    auto& lc = c.layers[li];
    // Feed-forward block: x_out = x_mid + W2 gelu(W1 LN2(x_mid)).
    k::linear_backward_params(ex, lc.f_act.data(), dx.data(), T, f, d, G + L.w2, G + L.b2);
    k::linear_backward_input(ex, dx.data(), T, d, W + L.w2, f, tmp_f.data());
    k::gelu_backward(ex, lc.f_pre.data(), tmp_f.data(), T * f, tmp_f2.data());
    k::linear_backward_params(ex, lc.h2.data(), tmp_f2.data(), T, d, f, G + L.w1, G + L.b1);
    k::linear_backward_input(ex, tmp_f2.data(), T, f, W + L.w1, d, tmp_d.data());
    std::vector<float> dln(T * d);
    k::layernorm_backward(ex, tmp_d.data(), lc.x_mid.data(), lc.mean2.data(), lc.rstd2.data(), W + L.ln2_g, T, d,
                          dln.data(), G + L.ln2_g, G + L.ln2_b);
    for (std::size_t i = 0; i < T * d; ++i) dx[i] += dln[i];  // dx is now d(x_mid)
    // Attention block: x_mid = x_in + Wo attn(Wqkv LN1(x_in)).
    k::linear_backward_params(ex, lc.attn.data(), dx.data(), T, d, d, G + L.wo, G + L.bo);
    k::linear_backward_input(ex, dx.data(), T, d, W + L.wo, d, dattn.data());
    k::attention_backward(ex, lc.qkv.data(), lc.P.data(), dattn.data(), batch.offsets, d, dims_.heads,
                          dqkv.data());
    k::linear_backward_params(ex, lc.h1.data(), dqkv.data(), T, d, 3 * d, G + L.wqkv, G + L.bqkv);
    k::linear_backward_input(ex, dqkv.data(), T, 3 * d, W + L.wqkv, d, tmp_d.data());
    k::layernorm_backward(ex, tmp_d.data(), lc.x_in.data(), lc.mean1.data(), lc.rstd1.data(), W + L.ln1_g, T, d,
                          dln.data(), G + L.ln1_g, G + L.ln1_b);
    for (std::size_t i = 0; i < T * d; ++i) dx[i] += dln[i];  // d(x_in)
  }

  for (std::size_t s = 0; s < B; ++s) {
    for (std::size_t t = batch.offsets[s]; t < batch.offsets[s + 1]; ++t) {
      float* gt = G + tok_emb_ + static_cast<std::size_t>(batch.ids[t]) * d;
      float* gp = G + pos_emb_ + (t - batch.offsets[s]) * d;
      for (std::size_t i = 0; i < d; ++i) {
        gt[i] += dx[t * d + i];
        gp[i] += dx[t * d + i];
      }
    }
  }
  return loss;
}

std::size_t Encoder::activation_bytes(const TokenBatch& batch) const {
  const std::size_t T = batch.tokens();
  const std::size_t d = dims_.d;
  const std::size_t f = dims_.ffn;
  const std::size_t per_layer = T * (9 * d + 2 * f + 4) + k::attention_cache_size(batch.offsets, dims_.heads);
  const std::size_t floats = layers_.size() * per_layer + T * (3 * d + 2) + batch.size() * (d + 2);
  return floats * sizeof(float);
}

}  // namespace stmt

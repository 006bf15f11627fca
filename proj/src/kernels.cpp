#include "stmt/kernels.hpp"

#include <cmath>
#include <vector>

namespace stmt::kernels {

namespace {

inline bool par(Exec ex) { return ex == Exec::parallel; }

using idx = std::ptrdiff_t;

}  // namespace

void linear_forward(Exec ex, const float* X, std::size_t T, std::size_t in, const float* W, const float* b,
                    std::size_t out, float* Y) {
#pragma omp parallel for schedule(static) if (par(ex))
  for (idx t = 0; t < static_cast<idx>(T); ++t) {
    const float* x = X + t * in;
    float* y = Y + t * out;
    for (std::size_t o = 0; o < out; ++o) {
      const float* w = W + o * in;
      float acc = 0.0f;
      for (std::size_t i = 0; i < in; ++i) acc += x[i] * w[i];
      y[o] = acc + (b ? b[o] : 0.0f);
    }
  }
}

void linear_backward_input(Exec ex, const float* dY, std::size_t T, std::size_t out, const float* W,
                           std::size_t in, float* dX) {
#pragma omp parallel for schedule(static) if (par(ex))
  for (idx t = 0; t < static_cast<idx>(T); ++t) {
    const float* dy = dY + t * out;
    float* dx = dX + t * in;
    for (std::size_t i = 0; i < in; ++i) dx[i] = 0.0f;
    for (std::size_t o = 0; o < out; ++o) {
      const float g = dy[o];
      const float* w = W + o * in;
      for (std::size_t i = 0; i < in; ++i) dx[i] += g * w[i];
    }
  }
}

void linear_backward_params(Exec ex, const float* X, const float* dY, std::size_t T, std::size_t in,
                            std::size_t out, float* dW, float* db) {
#pragma omp parallel for schedule(static) if (par(ex))
  for (idx o = 0; o < static_cast<idx>(out); ++o) {
    float* dw = dW + o * in;
    float bias = 0.0f;
    for (std::size_t t = 0; t < T; ++t) {
      const float g = dY[t * out + o];
      if (g == 0.0f) continue;
      bias += g;
      const float* x = X + t * in;
      for (std::size_t i = 0; i < in; ++i) dw[i] += g * x[i];
    }
    if (db) db[o] += bias;
  }
}

void layernorm_forward(Exec ex, const float* X, std::size_t T, std::size_t d, const float* gamma,
                       const float* beta, float* Y, float* mean, float* rstd) {
  constexpr float kEps = 1e-5f;
#pragma omp parallel for schedule(static) if (par(ex))
  for (idx t = 0; t < static_cast<idx>(T); ++t) {
    const float* x = X + t * d;
    float mu = 0.0f;
    for (std::size_t i = 0; i < d; ++i) mu += x[i];
    mu /= static_cast<float>(d);
    float var = 0.0f;
    for (std::size_t i = 0; i < d; ++i) var += (x[i] - mu) * (x[i] - mu);
    var /= static_cast<float>(d);
    const float rs = 1.0f / std::sqrt(var + kEps);
    float* y = Y + t * d;
    for (std::size_t i = 0; i < d; ++i) y[i] = (x[i] - mu) * rs * gamma[i] + beta[i];
    mean[t] = mu;
    rstd[t] = rs;
  }
}

void layernorm_backward(Exec ex, const float* dY, const float* X, const float* mean, const float* rstd,
                        const float* gamma, std::size_t T, std::size_t d, float* dX, float* dgamma, float* dbeta) {
#pragma omp parallel for schedule(static) if (par(ex))
  for (idx t = 0; t < static_cast<idx>(T); ++t) {
    const float* x = X + t * d;
    const float* dy = dY + t * d;
    float* dx = dX + t * d;
    const float mu = mean[t];
    const float rs = rstd[t];
    float sum_g = 0.0f;
    float sum_gx = 0.0f;
    for (std::size_t i = 0; i < d; ++i) {
      const float g = dy[i] * gamma[i];
      const float xhat = (x[i] - mu) * rs;
      sum_g += g;
      sum_gx += g * xhat;
    }
    const float inv_d = 1.0f / static_cast<float>(d);
    for (std::size_t i = 0; i < d; ++i) {
      const float g = dy[i] * gamma[i];
      const float xhat = (x[i] - mu) * rs;
      dx[i] = rs * (g - inv_d * sum_g - xhat * inv_d * sum_gx);
    }
  }
#pragma omp parallel for schedule(static) if (par(ex))
  for (idx i = 0; i < static_cast<idx>(d); ++i) {
    float gg = 0.0f;
    float gb = 0.0f;
    for (std::size_t t = 0; t < T; ++t) {
      const float xhat = (X[t * d + i] - mean[t]) * rstd[t];
      gg += dY[t * d + i] * xhat;
      gb += dY[t * d + i];
    }
    dgamma[i] += gg;
    dbeta[i] += gb;
  }
}

namespace {

constexpr float kGeluC = 0.7978845608028654f;  // sqrt(2 / pi)

}  // namespace

void gelu_forward(Exec ex, const float* X, std::size_t n, float* Y) {
#pragma omp parallel for schedule(static) if (par(ex))
  for (idx k = 0; k < static_cast<idx>(n); ++k) {
    const float x = X[k];
    const float u = kGeluC * (x + 0.044715f * x * x * x);
    Y[k] = 0.5f * x * (1.0f + std::tanh(u));
  }
}

void gelu_backward(Exec ex, const float* X, const float* dY, std::size_t n, float* dX) {
#pragma omp parallel for schedule(static) if (par(ex))
  for (idx k = 0; k < static_cast<idx>(n); ++k) {
    const float x = X[k];
    const float u = kGeluC * (x + 0.044715f * x * x * x);
    const float th = std::tanh(u);
    const float du = kGeluC * (1.0f + 3.0f * 0.044715f * x * x);
    dX[k] = dY[k] * (0.5f * (1.0f + th) + 0.5f * x * (1.0f - th * th) * du);
  }
}

std::size_t attention_cache_size(std::span<const std::size_t> offsets, std::size_t heads) {
  std::size_t n = 0;
  for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
    const std::size_t len = offsets[s + 1] - offsets[s];
    n += heads * len * len;
  }
  return n;
}

namespace {

std::vector<std::size_t> prob_offsets(std::span<const std::size_t> offsets, std::size_t heads) {
  std::vector<std::size_t> out(offsets.empty() ? 0 : offsets.size() - 1);
  std::size_t acc = 0;
  for (std::size_t s = 0; s < out.size(); ++s) {
    out[s] = acc;
    const std::size_t len = offsets[s + 1] - offsets[s];
    acc += heads * len * len;
  }
  return out;
}

}  // namespace

void attention_forward(Exec ex, const float* QKV, std::span<const std::size_t> offsets, std::size_t d,
                       std::size_t heads, float* out, float* P) {
  const std::size_t n_seq = offsets.empty() ? 0 : offsets.size() - 1;
  const std::size_t dh = d / heads;
  const float scale = 1.0f / std::sqrt(static_cast<float>(dh));
  const std::size_t stride = 3 * d;
  const auto poff = prob_offsets(offsets, heads);
  const idx jobs = static_cast<idx>(n_seq * heads);
#pragma omp parallel for schedule(dynamic, 1) if (par(ex))
  for (idx job = 0; job < jobs; ++job) {
    const std::size_t s = static_cast<std::size_t>(job) / heads;
    const std::size_t h = static_cast<std::size_t>(job) % heads;
    const std::size_t base = offsets[s];
    const std::size_t len = offsets[s + 1] - base;
    float* p = P + poff[s] + h * len * len;
    for (std::size_t i = 0; i < len; ++i) {
      const float* q = QKV + (base + i) * stride + h * dh;
      float* row = p + i * len;
      float mx = -INFINITY;
      for (std::size_t j = 0; j < len; ++j) {
        const float* k = QKV + (base + j) * stride + d + h * dh;
        float acc = 0.0f;
        for (std::size_t c = 0; c < dh; ++c) acc += q[c] * k[c];
        row[j] = acc * scale;
        if (row[j] > mx) mx = row[j];
      }
      float z = 0.0f;
      for (std::size_t j = 0; j < len; ++j) {
        row[j] = std::exp(row[j] - mx);
        z += row[j];
      }
      const float inv = 1.0f / z;
      for (std::size_t j = 0; j < len; ++j) row[j] *= inv;
      float* o = out + (base + i) * d + h * dh;
      for (std::size_t c = 0; c < dh; ++c) o[c] = 0.0f;
      for (std::size_t j = 0; j < len; ++j) {
        const float* v = QKV + (base + j) * stride + 2 * d + h * dh;
        const float pj = row[j];
        for (std::size_t c = 0; c < dh; ++c) o[c] += pj * v[c];
      }
    }
  }
}

void attention_backward(Exec ex, const float* QKV, const float* P, const float* dOut,
                        std::span<const std::size_t> offsets, std::size_t d, std::size_t heads, float* dQKV) {
  const std::size_t n_seq = offsets.empty() ? 0 : offsets.size() - 1;
  const std::size_t dh = d / heads;
  const float scale = 1.0f / std::sqrt(static_cast<float>(dh));
  const std::size_t stride = 3 * d;
  const auto poff = prob_offsets(offsets, heads);
  const idx jobs = static_cast<idx>(n_seq * heads);
#pragma omp parallel for schedule(dynamic, 1) if (par(ex))
  for (idx job = 0; job < jobs; ++job) {
    const std::size_t s = static_cast<std::size_t>(job) / heads;
    const std::size_t h = static_cast<std::size_t>(job) % heads;
    const std::size_t base = offsets[s];
    const std::size_t len = offsets[s + 1] - base;
    const float* p = P + poff[s] + h * len * len;
    for (std::size_t i = 0; i < len; ++i) {
      float* row = dQKV + (base + i) * stride;
      for (std::size_t c = 0; c < dh; ++c) {
        row[h * dh + c] = 0.0f;
        row[d + h * dh + c] = 0.0f;
        row[2 * d + h * dh + c] = 0.0f;
      }
    }
    std::vector<float> dS(len);
    for (std::size_t i = 0; i < len; ++i) {
      const float* go = dOut + (base + i) * d + h * dh;
      const float* prow = p + i * len;
      float dot = 0.0f;
      for (std::size_t j = 0; j < len; ++j) {
        const float* v = QKV + (base + j) * stride + 2 * d + h * dh;
        float* dv = dQKV + (base + j) * stride + 2 * d + h * dh;
        float dp = 0.0f;
        for (std::size_t c = 0; c < dh; ++c) {
          dp += go[c] * v[c];
          dv[c] += prow[j] * go[c];
        }
        dS[j] = dp;
        dot += prow[j] * dp;
      }
      const float* q = QKV + (base + i) * stride + h * dh;
      float* dq = dQKV + (base + i) * stride + h * dh;
      for (std::size_t j = 0; j < len; ++j) {
        const float g = prow[j] * (dS[j] - dot) * scale;
        const float* k = QKV + (base + j) * stride + d + h * dh;
        float* dk = dQKV + (base + j) * stride + d + h * dh;
        for (std::size_t c = 0; c < dh; ++c) {
          dq[c] += g * k[c];
          dk[c] += g * q[c];
        }
      }
    }
  }
}

void adamw_step(Exec ex, float* param, const float* grad, float* m, float* v, std::size_t n, float lr, float beta1,
                float beta2, float eps, float weight_decay, long step) {
  const float bc1 = 1.0f - static_cast<float>(std::pow(static_cast<double>(beta1), static_cast<double>(step)));
  const float bc2 = 1.0f - static_cast<float>(std::pow(static_cast<double>(beta2), static_cast<double>(step)));
#pragma omp parallel for schedule(static) if (par(ex))
  for (idx k = 0; k < static_cast<idx>(n); ++k) {
    const float g = grad[k];
    m[k] = beta1 * m[k] + (1.0f - beta1) * g;
    v[k] = beta2 * v[k] + (1.0f - beta2) * g * g;
    const float mhat = m[k] / bc1;
    const float vhat = v[k] / bc2;
    param[k] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * param[k]);
  }
}

}  // namespace stmt::kernels

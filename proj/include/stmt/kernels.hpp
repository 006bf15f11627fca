#pragma once

#include <cstddef>
#include <span>

// Dense kernels for the encoder. Each kernel has a serial and an OpenMP
// variant; both visit every output element with the same accumulation order,
// so their results are bitwise equal.
namespace stmt::kernels {

enum class Exec { serial, parallel };

// Y[t, o] = b[o] + sum_i X[t, i] * W[o, i]      (W is out x in, row-major)
void linear_forward(Exec ex, const float* X, std::size_t T, std::size_t in, const float* W, const float* b,
                    std::size_t out, float* Y);
// dX[t, i] = sum_o dY[t, o] * W[o, i]
void linear_backward_input(Exec ex, const float* dY, std::size_t T, std::size_t out, const float* W,
                           std::size_t in, float* dX);
// dW[o, i] += sum_t dY[t, o] * X[t, i];  db[o] += sum_t dY[t, o]
void linear_backward_params(Exec ex, const float* X, const float* dY, std::size_t T, std::size_t in,
                            std::size_t out, float* dW, float* db);

// Row-wise layer norm. mean/rstd (length T) are cached for the backward pass.
void layernorm_forward(Exec ex, const float* X, std::size_t T, std::size_t d, const float* gamma,
                       const float* beta, float* Y, float* mean, float* rstd);
// Writes dX; accumulates dgamma/dbeta.
void layernorm_backward(Exec ex, const float* dY, const float* X, const float* mean, const float* rstd,
                        const float* gamma, std::size_t T, std::size_t d, float* dX, float* dgamma, float* dbeta);

// tanh-approximated GELU.
void gelu_forward(Exec ex, const float* X, std::size_t n, float* Y);
void gelu_backward(Exec ex, const float* X, const float* dY, std::size_t n, float* dX);

// Multi-head self-attention over packed sequences. QKV is T x 3d (q | k | v),
// `offsets` has one entry per sequence plus the end (offsets.back() == T).
// P caches softmax probabilities: for each sequence s and head h a len x len
// block, laid out sequence-major starting at prob_offsets[s] * heads.
void attention_forward(Exec ex, const float* QKV, std::span<const std::size_t> offsets, std::size_t d,
                       std::size_t heads, float* out, float* P);
void attention_backward(Exec ex, const float* QKV, const float* P, const float* dOut,
                        std::span<const std::size_t> offsets, std::size_t d, std::size_t heads, float* dQKV);
// Number of floats needed for P.
std::size_t attention_cache_size(std::span<const std::size_t> offsets, std::size_t heads);

// Decoupled weight decay Adam. `step` is 1-based.
void adamw_step(Exec ex, float* param, const float* grad, float* m, float* v, std::size_t n, float lr, float beta1,
                float beta2, float eps, float weight_decay, long step);

}  // namespace stmt::kernels

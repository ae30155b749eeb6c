#pragma once

#include <cstddef>

#include "cwat/random.hpp"
#include "cwat/tensor.hpp"

// Differentiable operations. Every op checks its shapes up front and, when a
// tape is active and any input requires gradients, records a backward rule.
namespace cwat {

inline constexpr double kLayerNormEps = 1e-5;

// [n x d] * [d x k] -> [n x k]
Tensor matmul(const Tensor& a, const Tensor& b);
// [n x k] -> [k x n]
Tensor transpose(const Tensor& a);
// Elementwise sum of equal shapes.
Tensor add(const Tensor& a, const Tensor& b);
// [... x k] + bias[k], broadcast over leading dims.
Tensor add_bias(const Tensor& x, const Tensor& bias);
Tensor scale(const Tensor& x, double factor);
Tensor relu(const Tensor& x);
// Inverted dropout: kept activations are divided by (1 - rate). Identity when
// `training` is false or rate is 0.
Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng);
Tensor reshape(const Tensor& x, Shape shape);

// Grouped 1-D cross-correlation. input [M x L], kernel [N x M/groups x K]
// -> [N x floor((L + 2*padding - K)/stride) + 1].
Tensor conv1d_grouped(const Tensor& input, const Tensor& kernel, std::size_t groups,
                      std::size_t stride, std::size_t padding);
// Adjoint of conv1d_grouped. input [M x L], kernel [M x N/groups x K]
// -> [N x (L-1)*stride - 2*padding + K + output_padding].
Tensor conv_transpose1d_grouped(const Tensor& input, const Tensor& kernel,
                                std::size_t groups, std::size_t stride,
                                std::size_t padding, std::size_t output_padding);
// Keeps every stride-th column: [M x L] -> [M x floor((L-1)/stride) + 1].
Tensor subsample(const Tensor& x, std::size_t stride);

// Normalizes each innermost vector with its own mean and (population)
// variance, then applies gain/bias of the innermost length.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = kLayerNormEps);
Tensor softmax_lastdim(const Tensor& x);

// Mean over the innermost axis: [... x L] -> [...]
Tensor mean_lastdim(const Tensor& x);
// Mean over rows: [n x d] -> [d]
Tensor mean_rows(const Tensor& x);
Tensor sum(const Tensor& x);

Tensor mse_loss(const Tensor& pred, const Tensor& target);
// logits [k] (or [1 x k]), label in [0, k).
Tensor cross_entropy_logits(const Tensor& logits, std::size_t label);

}  // namespace cwat

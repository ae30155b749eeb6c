#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cwat/params.hpp"
#include "cwat/random.hpp"
#include "cwat/tensor.hpp"

// Single-head transformer encoder over channel tokens. Each of the C latent
// rows is embedded to model_dim; there is no positional encoding, so the
// pooled output is invariant to channel order.
namespace cwat {

struct TransformerConfig {
  std::size_t model_dim = 128;  // d
  std::size_t key_dim = 64;     // d_k
  std::size_t ff_dim = 256;     // d_ff
  std::size_t n_layers = 2;
  double dropout_rate = 0.1;

  void validate() const;
};

struct AttentionParams {
  Tensor wq, wk, wv;  // [d x d_k]
  Tensor wo;          // [d_k x d]
};

struct EncoderLayerParams {
  AttentionParams attention;
  Tensor w1, b1;  // [d x d_ff], [d_ff]
  Tensor w2, b2;  // [d_ff x d], [d]
  Tensor norm1_gain, norm1_bias, norm2_gain, norm2_bias;  // [d]
};

struct TransformerParams {
  Tensor w_in, b_in;  // [D x d], [d]
  std::vector<EncoderLayerParams> layers;
  Tensor w_cls, b_cls;  // [d x 2], [2]

  ParamList named() const;
};

// Linear weights ~ U(+-1/sqrt(fan_in)), biases 0, norm gains 1.
TransformerParams init_transformer(const TransformerConfig& config, std::size_t token_dim, Rng& rng);

struct AttentionOutput {
  Tensor output;   // [n x d]
  Tensor weights;  // [n x n], rows sum to 1
};

// softmax(Q K^T / sqrt(d_k)) V W^O with Q = X W^Q, K = X W^K, V = X W^V.
AttentionOutput attention_single_head(const Tensor& x, const AttentionParams& params);

// LayerNorm(X + Attn(X)), then LayerNorm(X1 + FFN(X1)); dropout on both
// sublayer outputs while training.
Tensor encoder_layer(const Tensor& x, const EncoderLayerParams& params, double dropout_rate,
                     bool training, Rng& rng, Tensor* attention_weights = nullptr);

// z [C x D] -> logits [2] (index 1 = abnormal).
Tensor classify(const Tensor& z, const TransformerParams& params, const TransformerConfig& config,
                bool training, Rng& rng, std::vector<Tensor>* attention_weights = nullptr);

// Itemized forward cost of one attention block over n tokens (1 MAC = 1 FLOP).
struct AttentionCost {
  std::uint64_t projection_params = 0;  // W^Q, W^K, W^V: 3*d*d_k
  std::uint64_t output_params = 0;      // W^O: d_k*d
  std::uint64_t projection_flops = 0;   // 3*n*d*d_k
  std::uint64_t score_flops = 0;        // n^2*d_k + n^2 scaling
  std::uint64_t softmax_flops = 0;      // 5*n^2
  std::uint64_t mix_flops = 0;          // n^2*d_k
  std::uint64_t output_flops = 0;       // n*d_k*d

  std::uint64_t params() const { return projection_params + output_params; }
  std::uint64_t flops() const {
    return projection_flops + score_flops + softmax_flops + mix_flops + output_flops;
  }
};

AttentionCost count_cost_attention(const TransformerConfig& config, std::size_t seq_len);

// Multi-head reference count 3 * d * D_orig * d_k, reported for comparison
// only.
std::uint64_t multi_head_reference_params(std::size_t model_dim, std::size_t original_dim,
                                          std::size_t key_dim);

}  // namespace cwat

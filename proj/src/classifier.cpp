#include "cwat/classifier.hpp"

#include <cmath>
#include <string>

#include "cwat/error.hpp"
#include "cwat/ops.hpp"

namespace cwat {

void TransformerConfig::validate() const {
  if (model_dim == 0 || key_dim == 0 || ff_dim == 0) {
    throw ConfigError("transformer: dimensions must be >= 1");
  }
  if (key_dim > model_dim) throw ConfigError("transformer: key_dim must not exceed model_dim");
  if (ff_dim < model_dim) throw ConfigError("transformer: ff_dim must be >= model_dim");
  if (n_layers == 0) throw ConfigError("transformer: n_layers must be >= 1");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    throw ConfigError("transformer: dropout_rate must lie in [0, 1)");
  }
}

ParamList TransformerParams::named() const {
  ParamList out{{"embed.weight", w_in}, {"embed.bias", b_in}};
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto p = "layer." + std::to_string(l) + ".";
    const auto& L = layers[l];
    out.push_back({p + "attn.wq", L.attention.wq});
    out.push_back({p + "attn.wk", L.attention.wk});
    out.push_back({p + "attn.wv", L.attention.wv});
    out.push_back({p + "attn.wo", L.attention.wo});
    out.push_back({p + "ffn.w1", L.w1});
    out.push_back({p + "ffn.b1", L.b1});
    out.push_back({p + "ffn.w2", L.w2});
    out.push_back({p + "ffn.b2", L.b2});
    out.push_back({p + "norm1.gain", L.norm1_gain});
    out.push_back({p + "norm1.bias", L.norm1_bias});
    out.push_back({p + "norm2.gain", L.norm2_gain});
    out.push_back({p + "norm2.bias", L.norm2_bias});
  }
  out.push_back({"head.weight", w_cls});
  out.push_back({"head.bias", b_cls});
  return out;
}

namespace {

Tensor linear_weight(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> data(fan_in * fan_out);
  for (auto& v : data) v = uniform(rng, -bound, bound);
  return Tensor({fan_in, fan_out}, std::move(data), true);
}

}  // namespace

TransformerParams init_transformer(const TransformerConfig& config, std::size_t token_dim, Rng& rng) {
  config.validate();
  if (token_dim == 0) throw ConfigError("transformer: token_dim must be >= 1");
  const std::size_t d = config.model_dim, dk = config.key_dim, dff = config.ff_dim;
  TransformerParams p;
  p.w_in = linear_weight(token_dim, d, rng);
  p.b_in = Tensor::zeros({d}, true);
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    EncoderLayerParams L;
    L.attention.wq = linear_weight(d, dk, rng);
    L.attention.wk = linear_weight(d, dk, rng);
    L.attention.wv = linear_weight(d, dk, rng);
    L.attention.wo = linear_weight(dk, d, rng);
    L.w1 = linear_weight(d, dff, rng);
    L.b1 = Tensor::zeros({dff}, true);
    L.w2 = linear_weight(dff, d, rng);
    L.b2 = Tensor::zeros({d}, true);
    L.norm1_gain = Tensor::full({d}, 1.0, true);
    L.norm1_bias = Tensor::zeros({d}, true);
    L.norm2_gain = Tensor::full({d}, 1.0, true);
    L.norm2_bias = Tensor::zeros({d}, true);
    p.layers.push_back(std::move(L));
  }
  p.w_cls = linear_weight(d, 2, rng);
  p.b_cls = Tensor::zeros({2}, true);
  return p;
}

AttentionOutput attention_single_head(const Tensor& x, const AttentionParams& params) {
  if (x.rank() != 2 || x.dim(1) != params.wq.dim(0)) {
    throw DimensionError("attention: input " + shape_str(x.shape()) + " does not match W^Q " +
                         shape_str(params.wq.shape()));
  }
  const double dk = static_cast<double>(params.wq.dim(1));
  Tensor q = matmul(x, params.wq);
  Tensor k = matmul(x, params.wk);
  Tensor v = matmul(x, params.wv);
  Tensor scores = scale(matmul(q, transpose(k)), 1.0 / std::sqrt(dk));
  Tensor weights = softmax_lastdim(scores);
  Tensor mixed = matmul(weights, v);
  return {matmul(mixed, params.wo), weights};
}

Tensor encoder_layer(const Tensor& x, const EncoderLayerParams& params, double dropout_rate,
                     bool training, Rng& rng, Tensor* attention_weights) {
  auto attn = attention_single_head(x, params.attention);
  if (attention_weights) *attention_weights = attn.weights;
  Tensor h = add(x, dropout(attn.output, dropout_rate, training, rng));
  h = layer_norm(h, params.norm1_gain, params.norm1_bias);
  Tensor ff = add_bias(matmul(relu(add_bias(matmul(h, params.w1), params.b1)), params.w2), params.b2);
  Tensor out = add(h, dropout(ff, dropout_rate, training, rng));
  return layer_norm(out, params.norm2_gain, params.norm2_bias);
}

Tensor classify(const Tensor& z, const TransformerParams& params, const TransformerConfig& config,
                bool training, Rng& rng, std::vector<Tensor>* attention_weights) {
  if (z.rank() != 2 || z.dim(1) != params.w_in.dim(0)) {
    throw DimensionError("classify: latent " + shape_str(z.shape()) +
                         " does not match embedding " + shape_str(params.w_in.shape()));
  }
  if (params.layers.size() != config.n_layers) {
    throw ConfigError("classify: parameters have " + std::to_string(params.layers.size()) +
                      " layers, config has " + std::to_string(config.n_layers));
  }
  if (attention_weights) attention_weights->clear();
  Tensor h = add_bias(matmul(z, params.w_in), params.b_in);
  for (const auto& layer : params.layers) {
    Tensor weights;
    h = encoder_layer(h, layer, config.dropout_rate, training, rng,
                      attention_weights ? &weights : nullptr);
    if (attention_weights) attention_weights->push_back(weights);
  }
  Tensor pooled = reshape(mean_rows(h), {1, config.model_dim});
  return reshape(add_bias(matmul(pooled, params.w_cls), params.b_cls), {2});
}

AttentionCost count_cost_attention(const TransformerConfig& config, std::size_t seq_len) {
  const std::uint64_t n = seq_len, d = config.model_dim, dk = config.key_dim;
  AttentionCost c;
  c.projection_params = 3 * d * dk;
  c.output_params = dk * d;
  c.projection_flops = 3 * n * d * dk;
  c.score_flops = n * n * dk + n * n;
  c.softmax_flops = 5 * n * n;
  c.mix_flops = n * n * dk;
  c.output_flops = n * dk * d;
  return c;
}

std::uint64_t multi_head_reference_params(std::size_t model_dim, std::size_t original_dim,
                                          std::size_t key_dim) {
  return 3ull * model_dim * original_dim * key_dim;
}

}  // namespace cwat

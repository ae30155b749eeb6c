#include "cwat/cae.hpp"

#include <cmath>
#include <string>

#include "cwat/error.hpp"
#include "cwat/ops.hpp"

namespace cwat {

std::vector<std::size_t> CaeConfig::stage_lengths() const {
  std::vector<std::size_t> lengths{input_length};
  for (const auto& s : stages) {
    const std::size_t L = lengths.back();
    lengths.push_back(L == 0 || s.stride == 0 ? 0 : (L - 1) / s.stride + 1);
  }
  return lengths;
}

std::vector<std::size_t> CaeConfig::stage_features() const {
  std::vector<std::size_t> features{1};
  for (const auto& s : stages) features.push_back(s.feature_multiplier);
  return features;
}

void CaeConfig::validate() const {
  if (channels == 0) throw ConfigError("cae: channels must be >= 1");
  if (input_length == 0) throw ConfigError("cae: input_length must be >= 1");
  if (stages.empty()) throw ConfigError("cae: at least one encoder stage is required");
  for (std::size_t k = 0; k < stages.size(); ++k) {
    const auto& s = stages[k];
    const std::string where = "cae stage " + std::to_string(k) + ": ";
    if (s.kernel_size == 0 || s.kernel_size % 2 == 0) {
      throw ConfigError(where + "kernel_size must be odd for same padding");
    }
    if (s.stride == 0) throw ConfigError(where + "stride must be >= 1");
    if (s.feature_multiplier == 0) throw ConfigError(where + "feature_multiplier must be >= 1");
  }
  if (stages.back().feature_multiplier != 1) {
    throw ConfigError("cae: the last stage must emit one feature per channel (z is C x D)");
  }
  const auto lengths = stage_lengths();
  for (std::size_t k = 0; k < stages.size(); ++k) {
    if (lengths[k] < stages[k].kernel_size / 2 + 1) {
      throw ConfigError("cae stage " + std::to_string(k) + ": input length " +
                        std::to_string(lengths[k]) + " shorter than the kernel half-width");
    }
  }
  if (latent_length() * 16 > input_length) {
    throw ConfigError("cae: latent length " + std::to_string(latent_length()) +
                      " violates D <= T/16 for T=" + std::to_string(input_length));
  }
}

ParamList CaeParams::encoder_named() const {
  ParamList out;
  for (std::size_t k = 0; k < encoder.size(); ++k) {
    const auto prefix = "encoder." + std::to_string(k) + ".";
    const auto& s = encoder[k];
    out.push_back({prefix + "kernel", s.kernel});
    if (s.shortcut) out.push_back({prefix + "shortcut", *s.shortcut});
    out.push_back({prefix + "norm_gain", s.norm_gain});
    out.push_back({prefix + "norm_bias", s.norm_bias});
  }
  return out;
}

ParamList CaeParams::decoder_named() const {
  ParamList out;
  for (std::size_t k = 0; k < decoder.size(); ++k) {
    const auto prefix = "decoder." + std::to_string(k) + ".";
    const auto& s = decoder[k];
    out.push_back({prefix + "kernel", s.kernel});
    if (s.norm_gain) out.push_back({prefix + "norm_gain", *s.norm_gain});
    if (s.norm_bias) out.push_back({prefix + "norm_bias", *s.norm_bias});
  }
  return out;
}

ParamList CaeParams::named() const {
  auto out = encoder_named();
  auto dec = decoder_named();
  out.insert(out.end(), dec.begin(), dec.end());
  return out;
}

namespace {

// [C*f_out x f_in x K]; with `shared`, the per-channel block is drawn once.
Tensor grouped_kernel(std::size_t C, std::size_t f_out, std::size_t f_in, std::size_t K,
                      Rng& rng, bool shared) {
  const double bound = std::sqrt(1.0 / static_cast<double>(f_in * K));
  const std::size_t block = f_out * f_in * K;
  std::vector<double> data(C * block);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t i = 0; i < block; ++i) {
      data[c * block + i] = (shared && c > 0) ? data[i] : uniform(rng, -bound, bound);
    }
  }
  return Tensor({C * f_out, f_in, K}, std::move(data), true);
}

std::size_t same_padding(std::size_t kernel) { return (kernel - 1) / 2; }

}  // namespace

CaeParams init_cae(const CaeConfig& config, Rng& rng, bool shared_across_channels) {
  config.validate();
  const auto lengths = config.stage_lengths();
  const auto features = config.stage_features();
  const std::size_t C = config.channels;
  CaeParams params;
  for (std::size_t k = 0; k < config.stages.size(); ++k) {
    const auto& s = config.stages[k];
    CaeEncoderStage st;
    st.kernel = grouped_kernel(C, features[k + 1], features[k], s.kernel_size, rng,
                               shared_across_channels);
    if (features[k] != features[k + 1]) {
      st.shortcut = grouped_kernel(C, features[k + 1], features[k], 1, rng, shared_across_channels);
    }
    st.norm_gain = Tensor::full({lengths[k]}, 1.0, true);
    st.norm_bias = Tensor::zeros({lengths[k]}, true);
    params.encoder.push_back(std::move(st));
  }
  for (std::size_t k = 0; k < config.stages.size(); ++k) {
    const auto& s = config.stages[k];
    CaeDecoderStage st;
    // Maps f_{k+1} features at L_{k+1} back to f_k features at L_k.
    st.kernel = grouped_kernel(C, features[k + 1], features[k], s.kernel_size, rng,
                               shared_across_channels);
    if (k > 0) {
      st.norm_gain = Tensor::full({lengths[k]}, 1.0, true);
      st.norm_bias = Tensor::zeros({lengths[k]}, true);
    }
    params.decoder.push_back(std::move(st));
  }
  return params;
}

Tensor encode(const Tensor& x, const CaeParams& params, const CaeConfig& config) {
  const std::size_t C = config.channels;
  if (x.rank() != 2 || x.dim(0) != C || x.dim(1) != config.input_length) {
    throw ConfigError("encode: input " + shape_str(x.shape()) + " does not match configured " +
                      shape_str({C, config.input_length}));
  }
  if (params.encoder.size() != config.stages.size()) {
    throw ConfigError("encode: parameters have " + std::to_string(params.encoder.size()) +
                      " stages, config has " + std::to_string(config.stages.size()));
  }
  Tensor h = x;
  for (std::size_t k = 0; k < config.stages.size(); ++k) {
    const auto& s = config.stages[k];
    const auto& p = params.encoder[k];
    Tensor conv = conv1d_grouped(h, p.kernel, C, 1, same_padding(s.kernel_size));
    Tensor shortcut = p.shortcut ? conv1d_grouped(h, *p.shortcut, C, 1, 0) : h;
    h = add(conv, shortcut);
    h = layer_norm(h, p.norm_gain, p.norm_bias);
    h = relu(h);
    h = subsample(h, s.stride);
  }
  return h;
}

Tensor decode(const Tensor& z, const CaeParams& params, const CaeConfig& config) {
  const std::size_t C = config.channels;
  const auto lengths = config.stage_lengths();
  if (z.rank() != 2 || z.dim(0) != C || z.dim(1) != lengths.back()) {
    throw ConfigError("decode: latent " + shape_str(z.shape()) + " does not match configured " +
                      shape_str({C, lengths.back()}));
  }
  if (params.decoder.size() != config.stages.size()) {
    throw ConfigError("decode: parameter/config stage count mismatch");
  }
  Tensor h = z;
  for (std::size_t r = config.stages.size(); r-- > 0;) {
    const auto& s = config.stages[r];
    const auto& p = params.decoder[r];
    const std::size_t pad = same_padding(s.kernel_size);
    const std::size_t base = (lengths[r + 1] - 1) * s.stride + s.kernel_size - 2 * pad;
    const std::size_t output_padding = lengths[r] - base;
    h = conv_transpose1d_grouped(h, p.kernel, C, s.stride, pad, output_padding);
    if (p.norm_gain) {
      h = layer_norm(h, *p.norm_gain, *p.norm_bias);
      h = relu(h);
    }
  }
  return h;
}

ConvCost count_cost_conv(const ConvLayerSpec& spec, ConvKind kind) {
  const std::uint64_t dense_weights =
      static_cast<std::uint64_t>(spec.kernel_size) * spec.in_channels * spec.out_channels;
  const std::uint64_t dense_flops = dense_weights * spec.length;
  if (kind == ConvKind::Standard) return {dense_flops, dense_weights};
  if (spec.groups == 0 || spec.in_channels % spec.groups != 0 ||
      spec.out_channels % spec.groups != 0) {
    throw ConfigError("count_cost_conv: channel counts must be multiples of C");
  }
  return {dense_flops / spec.groups, dense_weights / spec.groups};
}

}  // namespace cwat

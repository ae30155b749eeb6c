#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "cwat/params.hpp"
#include "cwat/random.hpp"
#include "cwat/tensor.hpp"

// Channelwise convolutional autoencoder. Every convolution is grouped with
// groups = C, so no weight ever connects two EEG channels.
namespace cwat {

struct ConvStage {
  std::size_t kernel_size = 7;
  std::size_t stride = 4;
  // Feature maps per EEG channel produced by this stage.
  std::size_t feature_multiplier = 1;
};

struct CaeConfig {
  std::size_t channels = 19;
  std::size_t input_length = 12000;
  std::vector<ConvStage> stages{{7, 4, 1}, {7, 4, 1}, {7, 4, 1}};

  // Temporal length entering each stage, plus the latent length at the end:
  // {T, L1, ..., D}. Each stage keeps its length through a same-padded
  // stride-1 convolution and then keeps every stride-th sample, so
  // L_{k+1} = ceil(L_k / stride).
  std::vector<std::size_t> stage_lengths() const;
  std::size_t latent_length() const { return stage_lengths().back(); }
  // Per-channel feature count entering each stage (first entry 1).
  std::vector<std::size_t> stage_features() const;
  // Throws ConfigError on even kernels, zero strides, a last stage with more
  // than one feature per channel, or a latent longer than T/16.
  void validate() const;
};

struct CaeEncoderStage {
  Tensor kernel;                   // [C*f_out x f_in x K]
  std::optional<Tensor> shortcut;  // [C*f_out x f_in x 1] when f_in != f_out
  Tensor norm_gain;                // [L]
  Tensor norm_bias;                // [L]
};

struct CaeDecoderStage {
  Tensor kernel;                    // [C*f_out x f_in x K] (transposed-conv layout)
  std::optional<Tensor> norm_gain;  // absent on the output stage
  std::optional<Tensor> norm_bias;
};

struct CaeParams {
  std::vector<CaeEncoderStage> encoder;
  // decoder[k] inverts encoder[k]; it runs in reverse order.
  std::vector<CaeDecoderStage> decoder;

  ParamList named() const;
  ParamList encoder_named() const;
  ParamList decoder_named() const;
};

// Kernels ~ U(-sqrt(1/fan_in), +sqrt(1/fan_in)), norm gains 1, biases 0.
// With `shared_across_channels` every channel receives identical kernels.
CaeParams init_cae(const CaeConfig& config, Rng& rng, bool shared_across_channels = false);

// x [C x T] -> z [C x D]. Per stage: grouped conv, residual add, layer norm
// over time (each channel row on its own), ReLU, stride subsampling.
Tensor encode(const Tensor& x, const CaeParams& params, const CaeConfig& config);

// z [C x D] -> reconstruction [C x T] through transposed grouped convs.
Tensor decode(const Tensor& z, const CaeParams& params, const CaeConfig& config);

enum class ConvKind { Standard, Channelwise };

// One convolution layer as the cost model sees it.
struct ConvLayerSpec {
  std::size_t kernel_size = 3;   // D_K
  std::size_t in_channels = 19;  // M
  std::size_t out_channels = 19; // N
  std::size_t length = 12000;    // D_T
  std::size_t groups = 19;       // C
};

struct ConvCost {
  std::uint64_t flops = 0;  // multiply-accumulates, 1 MAC = 1 FLOP
  std::uint64_t params = 0;
};

// Standard: D_K*M*N*D_T FLOPs and D_K*M*N weights. Channelwise: both / C.
ConvCost count_cost_conv(const ConvLayerSpec& spec, ConvKind kind);

}  // namespace cwat

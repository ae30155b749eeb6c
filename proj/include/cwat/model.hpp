#pragma once

#include <cstdint>
#include <vector>

#include "cwat/cae.hpp"
#include "cwat/classifier.hpp"

namespace cwat {

struct ModelConfig {
  CaeConfig cae;
  TransformerConfig transformer;

  void validate() const {
    cae.validate();
    transformer.validate();
  }
};

// The full pipeline: channelwise autoencoder feeding the single-head
// transformer classifier.
struct ModelParams {
  CaeParams cae;
  TransformerParams classifier;
};

ModelParams init_model(const ModelConfig& config, std::uint64_t seed);

struct ModelOutput {
  Tensor latent;  // [C x D]
  Tensor logits;  // [2]
};

ModelOutput forward(const Tensor& x, const ModelParams& params, const ModelConfig& config,
                    bool training, Rng& rng);

// Index of the larger logit (1 = abnormal). Ties go to normal.
int predict_label(const Tensor& logits);

}  // namespace cwat

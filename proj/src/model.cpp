#include "cwat/model.hpp"

namespace cwat {

ModelParams init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ModelParams params;
  params.cae = init_cae(config.cae, rng);
  params.classifier = init_transformer(config.transformer, config.cae.latent_length(), rng);
  return params;
}

ModelOutput forward(const Tensor& x, const ModelParams& params, const ModelConfig& config,
                    bool training, Rng& rng) {
  ModelOutput out;
  out.latent = encode(x, params.cae, config.cae);
  out.logits = classify(out.latent, params.classifier, config.transformer, training, rng);
  return out;
}

int predict_label(const Tensor& logits) { return logits(1) > logits(0) ? 1 : 0; }

}  // namespace cwat

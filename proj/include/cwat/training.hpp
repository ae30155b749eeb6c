#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cwat/model.hpp"
#include "cwat/preprocess.hpp"

namespace cwat {

// pretrain_cae: reconstruction MSE on the autoencoder.
// train_classifier: cross-entropy on the transformer (encoder frozen unless
//   freeze_encoder is false).
// joint: cross-entropy + reconstruction MSE on every parameter.
enum class Phase { PretrainCae, TrainClassifier, Joint };

std::string_view phase_name(Phase phase);
Phase parse_phase(std::string_view text);

struct TrainConfig {
  double lr = 1e-3;
  double weight_decay = 1e-6;
  std::size_t batch_size = 64;
  std::size_t epochs = 15;
  std::size_t warmup_steps = 200;
  std::uint64_t seed = 0;
  double val_fraction = 0.1;
  Phase phase = Phase::PretrainCae;
  bool freeze_encoder = true;
  // false: classic L2 (grad += wd * param); true: decoupled (AdamW style).
  bool decoupled_weight_decay = false;

  void validate() const;
};

// Linear warm-up: base_lr * min(1, step / warmup_steps), step counted from 1.
double lr_schedule(std::uint64_t step, double base_lr = 1e-3, std::uint64_t warmup_steps = 200);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::string> names;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

// One bias-corrected Adam update from the grads currently held by `params`.
// Throws NumericError naming the parameter on a non-finite gradient.
void adam_step(ParamList& params, AdamState& state, double lr, double weight_decay,
               bool decoupled_weight_decay = false);

struct SplitItem {
  std::string subject_id;
  CaseLabel label = CaseLabel::Normal;
};

// Indices into the input, partitioned so that no subject lands on both
// sides. Validation receives about val_fraction of the segments, filled
// greedily per label so both classes are represented.
struct SubjectSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::string> train_subjects;
  std::vector<std::string> val_subjects;
};

SubjectSplit split_by_subject(std::span<const SplitItem> items, double val_fraction,
                              std::uint64_t seed);
SubjectSplit split_by_subject(std::span<const Segment> segments, double val_fraction,
                              std::uint64_t seed);

struct MetricsRow {
  std::size_t epoch = 0;
  Phase phase = Phase::PretrainCae;
  std::string split;  // "train" or "val"
  double loss = 0.0;
  std::optional<double> accuracy;
  double lr = 0.0;
  double wall_seconds = 0.0;
};

// CSV with header epoch,phase,split,loss,accuracy,lr,wall_seconds.
std::string metrics_csv(std::span<const MetricsRow> rows, bool include_wall_seconds = true);
void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsRow> rows);

struct TrainResult {
  std::vector<MetricsRow> log;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  std::optional<double> best_val_accuracy;
  std::uint64_t steps = 0;
  AdamState adam;
};

// Trains `params` in place for config.epochs epochs and leaves them at the
// best-validation epoch. Segments are visited in an epoch-seeded shuffle,
// batched (last partial batch kept) and accumulated sample by sample.
TrainResult train(std::span<const Segment> train_set, std::span<const Segment> val_set,
                  const ModelConfig& model_config, ModelParams& params, const TrainConfig& config);

// Mean loss/accuracy over a dataset in evaluation mode.
struct EvalSummary {
  double loss = 0.0;
  std::optional<double> accuracy;
};
EvalSummary evaluate_loss(std::span<const Segment> data, const ModelConfig& model_config,
                          const ModelParams& params, Phase phase);

}  // namespace cwat

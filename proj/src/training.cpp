#include "cwat/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "cwat/detail/binary_io.hpp"
#include "cwat/error.hpp"
#include "cwat/ops.hpp"
#include "cwat/random.hpp"

namespace cwat {

std::string_view phase_name(Phase phase) {
  switch (phase) {
    case Phase::PretrainCae: return "pretrain_cae";
    case Phase::TrainClassifier: return "train_classifier";
    case Phase::Joint: return "joint";
  }
  return "unknown";
}

Phase parse_phase(std::string_view text) {
  if (text == "pretrain_cae") return Phase::PretrainCae;
  if (text == "train_classifier") return Phase::TrainClassifier;
  if (text == "joint") return Phase::Joint;
  throw ConfigError("unknown phase '" + std::string(text) +
                    "' (expected pretrain_cae, train_classifier or joint)");
}

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("train: lr must be > 0");
  if (weight_decay < 0.0 || !std::isfinite(weight_decay)) {
    throw ConfigError("train: weight_decay must be >= 0");
  }
  if (batch_size == 0) throw ConfigError("train: batch_size must be >= 1");
  if (epochs == 0) throw ConfigError("train: epochs must be >= 1");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw ConfigError("train: val_fraction must lie in (0, 1)");
  }
}

double lr_schedule(std::uint64_t step, double base_lr, std::uint64_t warmup_steps) {
  if (step == 0) throw UsageError("lr_schedule: steps are counted from 1");
  if (warmup_steps == 0 || step >= warmup_steps) return base_lr;
  return base_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
}

void adam_step(ParamList& params, AdamState& state, double lr, double weight_decay,
               bool decoupled_weight_decay) {
  if (state.names.empty()) {
    for (const auto& p : params) {
      state.names.push_back(p.name);
      state.m.emplace_back(p.tensor.numel(), 0.0);
      state.v.emplace_back(p.tensor.numel(), 0.0);
    }
  }
  if (state.names.size() != params.size()) {
    throw ConfigError("adam: optimizer state tracks " + std::to_string(state.names.size()) +
                      " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.names[i] != params[i].name || state.m[i].size() != params[i].tensor.numel()) {
      throw ConfigError("adam: optimizer state does not match parameter '" + params[i].name + "'");
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto g = params[i].tensor.grad();
    for (double v : g) {
      if (!std::isfinite(v)) {
        throw NumericError("non-finite gradient in parameter '" + params[i].name + "'");
      }
    }
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].tensor.mutable_data();
    const auto g = params[i].tensor.grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      double gj = g.empty() ? 0.0 : g[j];
      if (!decoupled_weight_decay) gj += weight_decay * w[j];
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * gj;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * gj * gj;
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      w[j] -= lr * mhat / (std::sqrt(vhat) + state.eps);
      if (decoupled_weight_decay) w[j] -= lr * weight_decay * w[j];
    }
  }
}

SubjectSplit split_by_subject(std::span<const SplitItem> items, double val_fraction,
                              std::uint64_t seed) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw ConfigError("split: val_fraction must lie in (0, 1)");
  }
  struct Subject {
    std::string id;
    std::vector<std::size_t> members;
    int label_votes = 0;  // > 0 mostly abnormal
  };
  std::map<std::string, std::size_t> index;
  std::vector<Subject> subjects;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].subject_id.empty()) throw DataError("split: segment " + std::to_string(i) + " has no subject_id");
    auto [it, inserted] = index.emplace(items[i].subject_id, subjects.size());
    if (inserted) subjects.push_back({items[i].subject_id, {}, 0});
    auto& s = subjects[it->second];
    s.members.push_back(i);
    s.label_votes += items[i].label == CaseLabel::Abnormal ? 1 : -1;
  }
  if (subjects.size() < 2) {
    throw DataError("split: need at least 2 subjects, got " + std::to_string(subjects.size()));
  }

  Rng rng(seed);
  std::vector<std::size_t> order(subjects.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle(order.begin(), order.end(), rng);

  // Each label group receives its own share of the validation budget, so
  // both classes appear in validation whenever the group has 2+ subjects.
  std::vector<bool> in_val(subjects.size(), false);
  for (int group : {-1, 1}) {
    std::vector<std::size_t> members;
    std::size_t group_segments = 0;
    for (std::size_t s : order) {
      const int g = subjects[s].label_votes > 0 ? 1 : -1;
      if (g != group) continue;
      members.push_back(s);
      group_segments += subjects[s].members.size();
    }
    if (members.size() < 2) continue;
    const double target = val_fraction * static_cast<double>(group_segments);
    double taken = 0.0;
    std::size_t picked = 0;
    for (std::size_t s : members) {
      if (picked + 1 >= members.size()) break;
      const double n = static_cast<double>(subjects[s].members.size());
      if (std::abs(taken + n - target) < std::abs(taken - target) || picked == 0) {
        in_val[s] = true;
        taken += n;
        ++picked;
      }
    }
  }
  const std::size_t n_val = static_cast<std::size_t>(std::count(in_val.begin(), in_val.end(), true));
  if (n_val == 0) in_val[order.front()] = true;
  if (n_val == subjects.size()) in_val[order.back()] = false;

  SubjectSplit split;
  for (std::size_t s = 0; s < subjects.size(); ++s) {
    auto& ids = in_val[s] ? split.val_subjects : split.train_subjects;
    auto& idx = in_val[s] ? split.val : split.train;
    ids.push_back(subjects[s].id);
    idx.insert(idx.end(), subjects[s].members.begin(), subjects[s].members.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  return split;
}

SubjectSplit split_by_subject(std::span<const Segment> segments, double val_fraction,
                              std::uint64_t seed) {
  std::vector<SplitItem> items;
  items.reserve(segments.size());
  for (const auto& s : segments) items.push_back({s.subject_id, s.label});
  return split_by_subject(std::span<const SplitItem>(items), val_fraction, seed);
}

namespace {

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string metrics_csv(std::span<const MetricsRow> rows, bool include_wall_seconds) {
  std::ostringstream os;
  os << "epoch,phase,split,loss,accuracy,lr";
  if (include_wall_seconds) os << ",wall_seconds";
  os << '\n';
  for (const auto& r : rows) {
    os << r.epoch << ',' << phase_name(r.phase) << ',' << r.split << ',' << format_double(r.loss)
       << ',' << (r.accuracy ? format_double(*r.accuracy) : std::string()) << ','
       << format_double(r.lr);
    if (include_wall_seconds) os << ',' << format_double(r.wall_seconds);
    os << '\n';
  }
  return os.str();
}

void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsRow> rows) {
  const auto text = metrics_csv(rows);
  const auto* p = reinterpret_cast<const std::uint8_t*>(text.data());
  detail::write_file_bytes(path, std::span<const std::uint8_t>(p, text.size()));
}

namespace {

struct PhaseParams {
  ParamList trainable;
  ParamList frozen;
};

PhaseParams select_params(const ModelParams& params, Phase phase, bool freeze_encoder) {
  PhaseParams out;
  auto append = [](ParamList& dst, const ParamList& src) { dst.insert(dst.end(), src.begin(), src.end()); };
  const auto enc = params.cae.encoder_named();
  const auto dec = params.cae.decoder_named();
  const auto cls = params.classifier.named();
  switch (phase) {
    case Phase::PretrainCae:
      append(out.trainable, enc);
      append(out.trainable, dec);
      append(out.frozen, cls);
      break;
    case Phase::TrainClassifier:
      append(freeze_encoder ? out.frozen : out.trainable, enc);
      append(out.frozen, dec);
      append(out.trainable, cls);
      break;
    case Phase::Joint:
      append(out.trainable, enc);
      append(out.trainable, dec);
      append(out.trainable, cls);
      break;
  }
  return out;
}

// Per-sample loss for the phase. `latent` short-circuits the encoder when
// features are cached.
struct SampleResult {
  Tensor loss;
  int prediction = -1;
};

SampleResult sample_loss(const Segment& seg, const Tensor* latent, const ModelConfig& mc,
                         const ModelParams& params, Phase phase, bool training, Rng& rng) {
  const std::size_t label = seg.label == CaseLabel::Abnormal ? 1 : 0;
  if (phase == Phase::PretrainCae) {
    Tensor z = encode(seg.data, params.cae, mc.cae);
    return {mse_loss(decode(z, params.cae, mc.cae), seg.data), -1};
  }
  Tensor z = latent ? *latent : encode(seg.data, params.cae, mc.cae);
  Tensor logits = classify(z, params.classifier, mc.transformer, training, rng);
  Tensor loss = cross_entropy_logits(logits, label);
  if (phase == Phase::Joint) loss = add(loss, mse_loss(decode(z, params.cae, mc.cae), seg.data));
  return {loss, predict_label(logits)};
}

void check_finite(double loss, std::size_t epoch) {
  if (!std::isfinite(loss)) {
    throw NumericError("non-finite loss in epoch " + std::to_string(epoch));
  }
}

EvalSummary summarize(std::span<const Segment> data, const std::vector<Tensor>* latents,
                      const ModelConfig& mc, const ModelParams& params, Phase phase) {
  NoGradGuard no_grad;
  Rng unused(0);
  double total = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Tensor* z = latents ? &(*latents)[i] : nullptr;
    auto r = sample_loss(data[i], z, mc, params, phase, false, unused);
    total += r.loss.item();
    const int label = data[i].label == CaseLabel::Abnormal ? 1 : 0;
    if (r.prediction == label) ++correct;
  }
  EvalSummary s;
  s.loss = data.empty() ? 0.0 : total / static_cast<double>(data.size());
  if (phase != Phase::PretrainCae && !data.empty()) {
    s.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  }
  return s;
}

std::vector<Tensor> cache_latents(std::span<const Segment> data, const ModelConfig& mc,
                                  const ModelParams& params) {
  NoGradGuard no_grad;
  std::vector<Tensor> out;
  out.reserve(data.size());
  for (const auto& seg : data) out.push_back(encode(seg.data, params.cae, mc.cae));
  return out;
}

// Higher accuracy wins; loss breaks ties (and decides alone for pretraining).
bool better(const EvalSummary& a, const EvalSummary& b) {
  if (a.accuracy && b.accuracy && *a.accuracy != *b.accuracy) return *a.accuracy > *b.accuracy;
  return a.loss < b.loss;
}

void copy_values(const ParamList& from, ParamList& to) {
  for (std::size_t i = 0; i < from.size(); ++i) {
    auto src = from[i].tensor.data();
    auto dst = to[i].tensor.mutable_data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

}  // namespace

EvalSummary evaluate_loss(std::span<const Segment> data, const ModelConfig& model_config,
                          const ModelParams& params, Phase phase) {
  return summarize(data, nullptr, model_config, params, phase);
}

TrainResult train(std::span<const Segment> train_set, std::span<const Segment> val_set,
                  const ModelConfig& mc, ModelParams& params, const TrainConfig& config) {
  config.validate();
  mc.validate();
  if (train_set.empty()) throw DataError("train: empty training set");
  const Phase phase = config.phase;
  const auto start = std::chrono::steady_clock::now();

  auto all = params.cae.named();
  {
    auto cls = params.classifier.named();
    all.insert(all.end(), cls.begin(), cls.end());
  }
  auto groups = select_params(params, phase, config.freeze_encoder);
  set_trainable(groups.frozen, false);
  set_trainable(groups.trainable, true);
  zero_grads(all);

  const bool cached = phase == Phase::TrainClassifier && config.freeze_encoder;
  std::vector<Tensor> train_latents, val_latents;
  if (cached) {
    train_latents = cache_latents(train_set, mc, params);
    val_latents = cache_latents(val_set, mc, params);
  }

  TrainResult result;
  AdamState& adam = result.adam;
  Rng dropout_rng(config.seed ^ 0x5eedd40b0a7ull);
  std::optional<EvalSummary> best;
  ParamList best_values = clone(groups.trainable);

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng epoch_rng(config.seed * 1000003ull + epoch);
    shuffle(order.begin(), order.end(), epoch_rng);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    double lr = 0.0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += config.batch_size) {
      const std::size_t b1 = std::min(order.size(), b0 + config.batch_size);
      const double inv = 1.0 / static_cast<double>(b1 - b0);
      for (std::size_t b = b0; b < b1; ++b) {
        const std::size_t i = order[b];
        Tape tape;
        auto r = sample_loss(train_set[i], cached ? &train_latents[i] : nullptr, mc, params,
                             phase, true, dropout_rng);
        const double value = r.loss.item();
        check_finite(value, epoch);
        loss_sum += value;
        const int label = train_set[i].label == CaseLabel::Abnormal ? 1 : 0;
        if (r.prediction == label) ++correct;
        tape.backward(scale(r.loss, inv));
      }
      lr = lr_schedule(adam.step + 1, config.lr, config.warmup_steps);
      adam_step(groups.trainable, adam, lr, config.weight_decay, config.decoupled_weight_decay);
      zero_grads(all);
    }

    const double now =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    MetricsRow train_row{epoch, phase, "train", loss_sum / static_cast<double>(order.size()),
                         std::nullopt, lr, now};
    if (phase != Phase::PretrainCae) {
      train_row.accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    }
    result.log.push_back(train_row);

    EvalSummary val = val_set.empty()
                          ? EvalSummary{train_row.loss, train_row.accuracy}
                          : summarize(val_set, cached ? &val_latents : nullptr, mc, params, phase);
    check_finite(val.loss, epoch);
    const double after =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back({epoch, phase, "val", val.loss, val.accuracy, lr, after});

    if (!best || better(val, *best)) {
      best = val;
      result.best_epoch = epoch;
      copy_values(groups.trainable, best_values);
    }
  }

  copy_values(best_values, groups.trainable);
  set_trainable(all, true);
  result.best_val_loss = best->loss;
  result.best_val_accuracy = best->accuracy;
  result.steps = adam.step;
  return result;
}

}  // namespace cwat

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "cwat/cae.hpp"
#include "cwat/checkpoint.hpp"
#include "cwat/classifier.hpp"
#include "cwat/commands.hpp"
#include "cwat/cost.hpp"
#include "cwat/edf.hpp"
#include "cwat/error.hpp"
#include "cwat/evaluation.hpp"
#include "cwat/ops.hpp"
#include "cwat/preprocess.hpp"
#include "cwat/random.hpp"
#include "cwat/run_config.hpp"
#include "cwat/synth.hpp"
#include "gradcheck.hpp"

using namespace cwat;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

void require(Outcome& o, bool cond, const std::string& what) {
  if (!cond && o.pass) {
    o.pass = false;
    o.detail = what;
  }
}

// ---------------------------------------------------------------- 1
Outcome cost_ratio() {
  Outcome o;
  const std::size_t C = 19;
  std::size_t checked = 0;
  for (std::size_t k : {1, 3, 5, 7, 9, 15}) {
    for (std::size_t fin : {1, 2, 4, 16}) {
      for (std::size_t fout : {1, 2, 4, 16}) {
        for (std::size_t len : {1, 188, 750, 3000, 12000}) {
          const ConvLayerSpec spec{k, C * fin, C * fout, len, C};
          const auto cw = count_cost_conv(spec, ConvKind::Channelwise);
          const auto st = count_cost_conv(spec, ConvKind::Standard);
          require(o, cw.flops * C == st.flops && st.flops % C == 0,
                  "flops ratio off at k=" + std::to_string(k) + " len=" + std::to_string(len));
          require(o, cw.params * C == st.params, "params ratio off");
          ++checked;
        }
      }
    }
  }
  for (const char* preset : {"default", "paper-defaults"}) {
    for (const auto& row : cae_cost_rows(model_preset(preset).cae)) {
      if (!row.standard_flops) continue;
      require(o, *row.standard_flops == C * row.flops, std::string(preset) + " row " + row.name);
      ++checked;
    }
  }
  if (o.pass) o.detail = std::to_string(checked) + " conv configs, ratio exactly 1/19";
  return o;
}

// ---------------------------------------------------------------- 2
Outcome attention_params() {
  Outcome o;
  Rng rng(2024);
  for (int i = 0; i < 50; ++i) {
    const std::size_t d = 1 + uniform_index(rng, 256), dk = 1 + uniform_index(rng, 256);
    TransformerConfig t;
    t.model_dim = d;
    t.key_dim = dk;
    t.ff_dim = std::max<std::size_t>(d, 1);
    const auto cost = count_cost_attention(t, 19);
    require(o, cost.projection_params == 3ull * d * dk,
            "d=" + std::to_string(d) + " dk=" + std::to_string(dk));
    if (dk <= d) {
      Rng init(i);
      const auto p = init_transformer(t, 4, init);
      const auto& a = p.layers[0].attention;
      require(o, a.wq.numel() + a.wk.numel() + a.wv.numel() == 3ull * d * dk, "materialized W^Q/K/V count");
    }
  }
  if (o.pass) o.detail = "50 (d, d_k) points, exact";
  return o;
}

// ---------------------------------------------------------------- 3
Outcome channel_independence() {
  Outcome o;
  Rng rng(3);
  std::size_t probes = 0;
  for (int draw = 0; draw < 100 && o.pass; ++draw) {
    CaeConfig cae;
    cae.channels = 19;
    cae.input_length = 1024;
    const std::size_t f1 = std::size_t{1} << uniform_index(rng, 3);
    cae.stages = {{7, 4, f1}, {5, 4, 1}};
    Rng init(1000 + draw);
    const auto params = init_cae(cae, init, false);
    std::vector<double> xs(19 * 1024);
    for (auto& v : xs) v = normal(rng, 0.0, 1.0);
    Tensor x({19, 1024}, xs);
    Tensor z;
    {
      NoGradGuard g;
      z = encode(x, params, cae);
    }
    const std::size_t j = uniform_index(rng, 19);
    auto ys = xs;
    for (std::size_t t = 0; t < 1024; ++t) ys[j * 1024 + t] += normal(rng, 0.0, 3.0);
    Tensor zp;
    {
      NoGradGuard g;
      zp = encode(Tensor({19, 1024}, ys), params, cae);
    }
    const std::size_t D = z.dim(1);
    bool changed = false;
    for (std::size_t i = 0; i < 19; ++i) {
      for (std::size_t t = 0; t < D; ++t) {
        const bool same = z.data()[i * D + t] == zp.data()[i * D + t];
        if (i == j) changed |= !same;
        else require(o, same, "row " + std::to_string(i) + " moved when channel " + std::to_string(j) + " changed");
      }
    }
    require(o, changed, "perturbed channel had no effect");
    if (draw % 10 == 0) {
      const std::size_t i = uniform_index(rng, 19);
      Tensor xg({19, 1024}, xs, true);
      Tape tape;
      Tensor zi = encode(xg, params, cae);
      std::vector<double> mask(19 * D, 0.0);
      for (std::size_t t = 0; t < D; ++t) mask[i * D + t] = normal(rng, 0.0, 1.0);
      Tensor probe = sum(matmul(reshape(zi, {1, 19 * D}), Tensor({19 * D, 1}, mask)));
      tape.backward(probe);
      const auto g = xg.grad();
      for (std::size_t c = 0; c < 19; ++c) {
        for (std::size_t t = 0; t < 1024; ++t) {
          if (c != i) require(o, g[c * 1024 + t] == 0.0, "nonzero dz_i/dx_j");
        }
      }
      ++probes;
    }
  }
  if (o.pass) o.detail = "100 draws bitwise, " + std::to_string(probes) + " gradient probes exactly zero";
  return o;
}

// ---------------------------------------------------------------- 4
Tensor random_tensor(Rng& rng, Shape shape) {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  std::vector<double> v(n);
  for (auto& x : v) x = normal(rng, 0.0, 1.0);
  return Tensor(std::move(shape), std::move(v), true);
}

Outcome gradients() {
  Outcome o;
  constexpr double rel = 1e-4, abs_tol = 1e-7;
  Rng rng(4);
  auto weighted = [&](Shape shape) {
    return random_tensor(rng, shape);
  };
  struct Case {
    std::string name;
    std::vector<Tensor> inputs;
    std::function<Tensor(std::vector<Tensor>&)> f;
  };
  std::vector<Case> cases;
  auto project = [](const Tensor& y, const Tensor& w) { return sum(matmul(reshape(y, {1, y.numel()}), w)); };
  auto probe_for = [&](std::size_t n) {
    const auto t = random_tensor(rng, {n});
    return Tensor({n, 1}, std::vector<double>(t.data().begin(), t.data().end()));
  };
  {
    auto w = probe_for(12);
    cases.push_back({"matmul", {weighted({3, 4}), weighted({4, 4})}, [=](auto& in) { return project(matmul(in[0], in[1]), w); }});
  }
  {
    auto w = probe_for(12);
    cases.push_back({"transpose", {weighted({3, 4})}, [=](auto& in) { return project(transpose(in[0]), w); }});
  }
  {
    auto w = probe_for(12);
    cases.push_back({"add", {weighted({3, 4}), weighted({3, 4})}, [=](auto& in) { return project(add(in[0], in[1]), w); }});
  }
  {
    auto w = probe_for(12);
    cases.push_back({"add_bias", {weighted({3, 4}), weighted({4})}, [=](auto& in) { return project(add_bias(in[0], in[1]), w); }});
  }
  {
    auto w = probe_for(12);
    cases.push_back({"scale", {weighted({3, 4})}, [=](auto& in) { return project(scale(in[0], -1.7), w); }});
  }
  {
    auto w = probe_for(12);
    cases.push_back({"relu", {weighted({3, 4})}, [=](auto& in) { return project(relu(in[0]), w); }});
  }
  {
    auto w = probe_for(12);
    cases.push_back({"dropout", {weighted({3, 4})}, [=](auto& in) {
      Rng mask(77);
      return project(dropout(in[0], 0.3, true, mask), w);
    }});
  }
  {
    auto w = probe_for(12);
    cases.push_back({"reshape", {weighted({3, 4})}, [=](auto& in) { return project(reshape(in[0], {2, 6}), w); }});
  }
  {
    auto w = probe_for(3 * 2 * 5);
    cases.push_back({"conv1d_grouped", {weighted({3, 10}), weighted({6, 1, 3})},
                     [=](auto& in) { return project(conv1d_grouped(in[0], in[1], 3, 2, 1), w); }});
  }
  {
    auto w = probe_for(4 * 7);
    cases.push_back({"conv1d_grouped (mixing)", {weighted({4, 7}), weighted({4, 2, 3})},
                     [=](auto& in) { return project(conv1d_grouped(in[0], in[1], 2, 1, 1), w); }});
  }
  {
    auto w = probe_for(3 * 10);
    cases.push_back({"conv_transpose1d_grouped", {weighted({6, 5}), weighted({6, 1, 3})},
                     [=](auto& in) { return project(conv_transpose1d_grouped(in[0], in[1], 3, 2, 1, 1), w); }});
  }
  {
    auto w = probe_for(3 * 4);
    cases.push_back({"subsample", {weighted({3, 10})}, [=](auto& in) { return project(subsample(in[0], 3), w); }});
  }
  {
    auto w = probe_for(12);
    cases.push_back({"layer_norm", {weighted({3, 4}), weighted({4}), weighted({4})},
                     [=](auto& in) { return project(layer_norm(in[0], in[1], in[2]), w); }});
  }
  {
    auto w = probe_for(12);
    cases.push_back({"softmax_lastdim", {weighted({3, 4})}, [=](auto& in) { return project(softmax_lastdim(in[0]), w); }});
  }
  {
    auto w = probe_for(3);
    cases.push_back({"mean_lastdim", {weighted({3, 4})}, [=](auto& in) { return project(mean_lastdim(in[0]), w); }});
  }
  {
    auto w = probe_for(4);
    cases.push_back({"mean_rows", {weighted({3, 4})}, [=](auto& in) { return project(mean_rows(in[0]), w); }});
  }
  cases.push_back({"sum", {weighted({3, 4})}, [](auto& in) { return sum(in[0]); }});
  cases.push_back({"mse_loss", {weighted({3, 4}), weighted({3, 4})}, [](auto& in) { return mse_loss(in[0], in[1]); }});
  cases.push_back({"cross_entropy_logits", {weighted({2})}, [](auto& in) { return cross_entropy_logits(in[0], 1); }});

  double worst = 0.0, worst_abs = 0.0;
  for (auto& c : cases) {
    auto r = cwat::testing::grad_check(c.inputs, [&] { return c.f(c.inputs); }, rel, abs_tol);
    worst = std::max(worst, r.worst_rel);
    worst_abs = std::max(worst_abs, r.worst_abs);
    require(o, r.ok, c.name + ": " + r.detail);
  }

  ModelConfig mc;
  mc.cae.channels = 4;
  mc.cae.input_length = 64;
  mc.cae.stages = {{3, 4, 2}, {3, 4, 1}};
  mc.transformer = {8, 4, 16, 1, 0.1};
  const auto params = init_model(mc, 44);
  Tensor x = random_tensor(rng, {4, 64});
  std::vector<Tensor> inputs{x};
  for (auto& p : params.cae.named()) inputs.push_back(p.tensor);
  for (auto& p : params.classifier.named()) inputs.push_back(p.tensor);
  auto r = cwat::testing::grad_check(inputs, [&] {
    Rng drop(9);
    auto out = forward(x, params, mc, true, drop);
    return add(cross_entropy_logits(out.logits, 1), mse_loss(decode(out.latent, params.cae, mc.cae), x));
  }, rel, abs_tol);
  worst = std::max(worst, r.worst_rel);
  worst_abs = std::max(worst_abs, r.worst_abs);
  require(o, r.ok, "composed model: " + r.detail);
  if (o.pass) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%zu ops + composed model, worst abs err %.1e, worst rel err above floor %.1e",
                  cases.size(), worst_abs, worst);
    o.detail = buf;
  }
  return o;
}

// ---------------------------------------------------------------- 5
Outcome vote_oracle() {
  Outcome o;
  Rng rng(5);
  std::size_t ties = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Prediction> preds;
    const std::size_t cases = 1 + uniform_index(rng, 40);
    for (std::size_t c = 0; c < cases; ++c) {
      const int label = uniform01(rng) < 0.5;
      const std::size_t n = 1 + uniform_index(rng, 8);
      for (std::size_t k = 0; k < n; ++k) preds.push_back({"case" + std::to_string(c), label, uniform01(rng) < 0.5});
    }
    shuffle(preds.begin(), preds.end(), rng);
    const auto rep = evaluate_predictions(preds);

    std::map<std::string, std::array<int, 3>> tally;
    ConfusionCounts sig;
    for (const auto& p : preds) {
      auto& t = tally[p.case_id];
      t[0] += p.pred;
      t[1] += 1;
      t[2] = p.label;
      if (p.label) (p.pred ? sig.tp : sig.fn)++;
      else (p.pred ? sig.fp : sig.tn)++;
    }
    ConfusionCounts cas;
    for (const auto& [id, t] : tally) {
      if (2 * t[0] == t[1]) ++ties;
      const int vote = 2 * t[0] > t[1];
      if (t[2]) (vote ? cas.tp : cas.fn)++;
      else (vote ? cas.fp : cas.tn)++;
    }
    require(o, rep.per_signal == sig, "per-signal counts differ at trial " + std::to_string(trial));
    require(o, rep.per_case == cas, "per-case counts differ at trial " + std::to_string(trial));
    auto ratio = [](std::uint64_t a, std::uint64_t b) -> std::optional<double> {
      if (b == 0) return std::nullopt;
      return static_cast<double>(a) / static_cast<double>(b);
    };
    require(o, rep.per_case_rates.sensitivity == ratio(cas.tp, cas.tp + cas.fn), "sensitivity");
    require(o, rep.per_case_rates.specificity == ratio(cas.tn, cas.tn + cas.fp), "specificity");
    require(o, rep.per_case_rates.accuracy == ratio(cas.tp + cas.tn, cas.total()), "accuracy");
  }
  if (o.pass) o.detail = "1000 groupings exact, " + std::to_string(ties) + " ties resolved to normal";
  return o;
}

// ---------------------------------------------------------------- 6
Outcome preprocess_contract() {
  Outcome o;
  Rng rng(6);
  EegRecording rec;
  const double rate = 250.0, seconds = 16 * 60.0;
  const auto n = static_cast<std::size_t>(rate * seconds);
  for (std::size_t c = 0; c < 19; ++c) {
    EegChannel ch{std::string(kMontage10_20[c]), rate, std::vector<double>(n)};
    const double f = 2.0 + static_cast<double>(c);
    for (std::size_t i = 0; i < n; ++i) {
      ch.samples[i] = 30.0 * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / rate) +
                      10.0 * std::sin(2.0 * std::numbers::pi * 60.0 * static_cast<double>(i) / rate) +
                      normal(rng, 0.0, 1.0) + 50.0;
    }
    rec.channels.push_back(std::move(ch));
  }
  rec.duration_seconds = seconds;
  const auto segs = preprocess_recording(rec, PreprocessConfig{}, "case");
  require(o, segs.size() == 8, "expected 8 segments, got " + std::to_string(segs.size()));
  double worst_mean = 0.0;
  for (const auto& s : segs) {
    require(o, s.data.dim(0) == 19 && s.data.dim(1) == 12000, "segment shape " + shape_str(s.data.shape()));
    for (std::size_t c = 0; c < 19; ++c) {
      double m = 0.0;
      for (std::size_t t = 0; t < 12000; ++t) m += s.data.data()[c * 12000 + t];
      worst_mean = std::max(worst_mean, std::abs(m / 12000.0));
    }
  }
  require(o, worst_mean < 1e-9, "z-norm mean too large");

  std::vector<double> tone(static_cast<std::size_t>(rate * 60.0));
  for (std::size_t i = 0; i < tone.size(); ++i) tone[i] = std::sin(2.0 * std::numbers::pi * 60.0 * static_cast<double>(i) / rate);
  const auto out = downsample(tone, rate, 100.0);
  double s_in = 0.0, s_out = 0.0;
  for (double v : tone) s_in += v * v;
  for (std::size_t i = 100; i + 100 < out.size(); ++i) s_out += out[i] * out[i];
  const double ratio = std::sqrt(s_out / static_cast<double>(out.size() - 200)) /
                       std::sqrt(s_in / static_cast<double>(tone.size()));
  require(o, ratio < 0.05, "60 Hz RMS ratio " + std::to_string(ratio));
  if (o.pass) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "8 x 19x12000, 60 Hz residual %.2e RMS, max |mean| %.1e", ratio, worst_mean);
    o.detail = buf;
  }
  return o;
}

// ---------------------------------------------------------------- 7 and 10
struct DeskRun {
  EvaluationReport report;
  std::vector<std::uint8_t> checkpoint;
  std::string metrics;
  double seconds = 0.0;
};

RunConfig desk_config(Phase phase, std::size_t epochs) {
  RunConfig rc;
  rc.train.phase = phase;
  rc.train.epochs = epochs;
  rc.train.batch_size = 16;
  rc.train.warmup_steps = 20;
  rc.workers = 1;
  return rc;
}

DeskRun desk_run(const std::vector<Segment>& segments) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto pre_cfg = desk_config(Phase::PretrainCae, 3);
  const auto pre = train_on_segments(segments, pre_cfg);
  const auto cls_cfg = desk_config(Phase::TrainClassifier, 15);
  const auto cls = train_on_segments(segments, cls_cfg, &pre.params);
  std::vector<Segment> val;
  for (std::size_t i : cls.split.val) val.push_back(segments[i]);
  DeskRun run;
  run.report = evaluate_predictions(predict_segments(val, cls.params, cls_cfg.model));
  run.checkpoint = encode_checkpoint(make_checkpoint(cls_cfg.to_text(), cls.params, &cls.result.adam));
  run.metrics = metrics_csv(pre.result.log, false) + metrics_csv(cls.result.log, false);
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

std::vector<Segment> desk_segments() {
  SynthSpec spec;
  spec.n_cases = 100;
  spec.segments_per_case = 4;
  return synth_segments(spec);
}

Outcome learnability(const DeskRun& run) {
  Outcome o;
  const double sig = run.report.per_signal_rates.accuracy.value_or(0.0);
  const double cas = run.report.per_case_rates.accuracy.value_or(0.0);
  require(o, sig >= 0.90, "per-signal accuracy " + std::to_string(sig));
  require(o, cas >= 0.95, "per-case accuracy " + std::to_string(cas));
  require(o, cas >= sig, "per-case below per-signal");
  require(o, run.seconds < 15 * 60.0, "run took " + std::to_string(run.seconds) + " s");
  char buf[200];
  std::snprintf(buf, sizeof buf, "per-signal %.3f (%llu segs), per-case %.3f (%llu cases), %.0f s", sig,
                static_cast<unsigned long long>(run.report.per_signal.total()), cas,
                static_cast<unsigned long long>(run.report.per_case.total()), run.seconds);
  if (o.pass) o.detail = buf;
  else o.detail += "; " + std::string(buf);
  return o;
}

Outcome determinism(const DeskRun& a, const DeskRun& b) {
  Outcome o;
  require(o, a.checkpoint == b.checkpoint, "checkpoint bytes differ");
  require(o, a.metrics == b.metrics, "metrics differ");
  if (o.pass) o.detail = std::to_string(a.checkpoint.size()) + " checkpoint bytes and metrics identical";
  return o;
}

// ---------------------------------------------------------------- 8
Outcome cost_sanity() {
  Outcome o;
  const auto preset = model_preset("paper-defaults");
  const auto report = model_cost(preset.cae, preset.transformer);
  const auto total = report.total();
  require(o, total.flops >= 100'000'000ull && total.flops <= 400'000'000ull, "total " + format_count(total.flops));
  require(o, report.raw_transformer.has_value(), "missing raw-input preset");
  if (report.raw_transformer) {
    require(o, report.raw_transformer->flops >= 20 * total.flops, "raw preset below 20x");
    char buf[200];
    std::snprintf(buf, sizeof buf, "CwA-T %s FLOPs / %s params (ref 202.0M / 2.9M); raw %s (%.0fx, ref 59x)",
                  format_count(total.flops).c_str(), format_count(total.params).c_str(),
                  format_count(report.raw_transformer->flops).c_str(),
                  static_cast<double>(report.raw_transformer->flops) / static_cast<double>(total.flops));
    if (o.pass) o.detail = buf;
  }
  return o;
}

// ---------------------------------------------------------------- 9
EdfFile random_fixture(Rng& rng, std::size_t index) {
  EdfFile f;
  f.header.patient_id = "X " + std::to_string(index);
  f.header.recording_id = "fixture " + std::to_string(index);
  f.header.n_records = static_cast<long>(1 + uniform_index(rng, 5));
  f.header.record_duration = index % 2 ? 1.0 : 0.5;
  f.header.n_signals = 1 + uniform_index(rng, 6);
  f.header.header_bytes = 256 * (1 + f.header.n_signals);
  for (std::size_t s = 0; s < f.header.n_signals; ++s) {
    SignalHeader sh;
    sh.label = "EEG " + std::string(kMontage10_20[s]) + "-REF";
    sh.physical_min = -500.0 - static_cast<double>(uniform_index(rng, 100));
    sh.physical_max = 500.0 + static_cast<double>(uniform_index(rng, 100));
    sh.samples_per_record = 1 + uniform_index(rng, 50);
    sh.prefiltering = "HP:0.1Hz";
    std::vector<std::int16_t> data(sh.samples_per_record * static_cast<std::size_t>(f.header.n_records));
    for (auto& v : data) v = static_cast<std::int16_t>(static_cast<long>(uniform_index(rng, 65536)) - 32768);
    f.signals.push_back(sh);
    f.samples.push_back(std::move(data));
  }
  return f;
}

void put(std::vector<std::uint8_t>& b, std::size_t off, std::size_t width, std::string text) {
  text.resize(width, ' ');
  std::copy(text.begin(), text.end(), b.begin() + static_cast<long>(off));
}

Outcome edf_round_trip() {
  Outcome o;
  Rng rng(9);
  std::vector<std::uint8_t> base;
  for (std::size_t i = 0; i < 20; ++i) {
    const auto f = random_fixture(rng, i);
    const auto bytes = write_edf(f);
    const auto back = parse_edf(bytes);
    const auto& h = back.header;
    require(o, h.patient_id == f.header.patient_id && h.recording_id == f.header.recording_id &&
                   h.n_records == f.header.n_records && h.record_duration == f.header.record_duration &&
                   h.n_signals == f.header.n_signals && h.header_bytes == f.header.header_bytes,
            "main header mismatch in fixture " + std::to_string(i));
    for (std::size_t s = 0; s < f.signals.size() && s < back.signals.size(); ++s) {
      const auto& a = f.signals[s];
      const auto& b = back.signals[s];
      require(o, a.label == b.label && a.physical_min == b.physical_min && a.physical_max == b.physical_max &&
                     a.digital_min == b.digital_min && a.digital_max == b.digital_max &&
                     a.samples_per_record == b.samples_per_record && a.prefiltering == b.prefiltering,
              "signal header mismatch in fixture " + std::to_string(i));
    }
    require(o, back.samples == f.samples, "samples differ in fixture " + std::to_string(i));
    require(o, write_edf(back) == bytes, "re-encoding differs in fixture " + std::to_string(i));
    if (i == 3) base = bytes;
  }

  const std::size_t ns = parse_edf(base).header.n_signals;
  const std::size_t sig0 = 256;
  std::vector<std::pair<std::string, std::function<void(std::vector<std::uint8_t>&)>>> mutants{
      {"truncated header", [](auto& b) { b.resize(100); }},
      {"header_bytes mismatch", [](auto& b) { put(b, 184, 8, "1024"); }},
      {"n_signals not a number", [](auto& b) { put(b, 252, 4, "ab"); }},
      {"n_signals beyond header", [=](auto& b) { put(b, 252, 4, std::to_string(ns + 40)); }},
      {"record duration garbage", [](auto& b) { put(b, 244, 8, "x.y"); }},
      {"n_records garbage", [](auto& b) { put(b, 236, 8, "--3"); }},
      {"digital min above max", [=](auto& b) { put(b, sig0 + ns * (16 + 80 + 8 + 8 + 8), 8, "40000"); }},
      {"samples per record negative", [=](auto& b) { put(b, sig0 + ns * (16 + 80 + 8 + 8 + 8 + 8 + 8 + 80), 8, "-5"); }},
      {"data area truncated", [](auto& b) { b.resize(b.size() - 1); }},
      {"physical min equals max", [=](auto& b) {
         put(b, sig0 + ns * (16 + 80 + 8), 8, "7");
         put(b, sig0 + ns * (16 + 80 + 8 + 8), 8, "7");
       }},
  };
  std::size_t structured = 0;
  for (const auto& [name, mutate] : mutants) {
    auto bytes = base;
    mutate(bytes);
    try {
      (void)parse_edf(bytes);
      require(o, false, "mutant '" + name + "' parsed without error");
    } catch (const ParseError&) {
      ++structured;
    } catch (const std::exception& e) {
      require(o, false, "mutant '" + name + "' raised a non-parse error: " + e.what());
    }
  }
  if (o.pass) o.detail = "20 fixtures identical, " + std::to_string(structured) + "/10 mutants raised ParseError";
  return o;
}

int report(int id, const std::string& name, const std::function<Outcome()>& f) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = f();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%s %2d %-26s %8.2fs  %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), s, o.detail.c_str());
  std::fflush(stdout);
  return o.pass ? 0 : 1;
}

}  // namespace

int main() {
  int failures = 0;
  failures += report(1, "cost-ratio identity", cost_ratio);
  failures += report(2, "attention parameters", attention_params);
  failures += report(3, "channel independence", channel_independence);
  failures += report(4, "gradient correctness", gradients);
  failures += report(5, "vote and metric oracles", vote_oracle);
  failures += report(6, "preprocessing contract", preprocess_contract);
  std::vector<Segment> segments;
  DeskRun first, second;
  failures += report(7, "end-to-end learnability", [&] {
    segments = desk_segments();
    first = desk_run(segments);
    return learnability(first);
  });
  failures += report(8, "cost report sanity", cost_sanity);
  failures += report(9, "EDF round-trip", edf_round_trip);
  failures += report(10, "determinism", [&] {
    second = desk_run(segments);
    return determinism(first, second);
  });
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

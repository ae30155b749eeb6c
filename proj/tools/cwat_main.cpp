#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cwat/commands.hpp"
#include "cwat/error.hpp"

namespace fs = std::filesystem;

namespace {

int exit_code(const cwat::Error& e) {
  using Kind = cwat::Error::Kind;
  switch (e.kind()) {
    case Kind::Usage:
    case Kind::Config: return 1;
    case Kind::Numeric: return 3;
    default: return 2;
  }
}

// Flags shared by the commands that build a RunConfig.
struct ConfigFlags {
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> phase;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<double> lr;
  std::optional<std::size_t> warmup_steps;
  std::optional<double> weight_decay;
  std::optional<double> val_fraction;
  std::optional<std::size_t> workers;
  std::string preset;
  std::vector<std::string> overrides;

  void add_to(CLI::App* app, bool training) {
    app->add_option("--config", config_file, "config file (key = value lines)");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--workers", workers, "preprocessing worker threads");
    app->add_option("--preset", preset, "model preset: desk or paper-defaults");
    app->add_option("--set", overrides, "extra key=value config override (repeatable)");
    if (!training) return;
    app->add_option("--phase", phase, "pretrain_cae, train_classifier or joint");
    app->add_option("--epochs", epochs);
    app->add_option("--batch-size", batch_size);
    app->add_option("--lr", lr);
    app->add_option("--warmup-steps", warmup_steps);
    app->add_option("--weight-decay", weight_decay);
    app->add_option("--val-fraction", val_fraction);
  }

  cwat::RunConfig build(const cwat::RunConfig& base) const {
    cwat::RunConfig cfg = base;
    if (!preset.empty()) cfg.model = cwat::model_preset(preset);
    if (!config_file.empty()) cfg = cwat::read_run_config(config_file, cfg);
    if (seed) cfg.train.seed = *seed;
    if (phase) cfg.train.phase = cwat::parse_phase(*phase);
    if (epochs) cfg.train.epochs = *epochs;
    if (batch_size) cfg.train.batch_size = *batch_size;
    if (lr) cfg.train.lr = *lr;
    if (warmup_steps) cfg.train.warmup_steps = *warmup_steps;
    if (weight_decay) cfg.train.weight_decay = *weight_decay;
    if (val_fraction) cfg.train.val_fraction = *val_fraction;
    if (workers) cfg.workers = *workers;
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw cwat::UsageError("--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cwat: channelwise autoencoder + transformer EEG toolkit"};
  app.require_subcommand(1);

  cwat::SynthOptions synth;
  std::string synth_format = "segments";
  auto* synth_cmd = app.add_subcommand("synth", "generate a labeled synthetic dataset");
  synth_cmd->add_option("--out", synth.out, "output directory")->required();
  synth_cmd->add_option("--cases", synth.spec.n_cases);
  synth_cmd->add_option("--segments-per-case", synth.spec.segments_per_case);
  synth_cmd->add_option("--seed", synth.spec.seed);
  synth_cmd->add_option("--rate", synth.spec.rate_hz, "sampling rate in Hz");
  synth_cmd->add_option("--noise", synth.spec.noise_std_uv, "noise standard deviation in uV");
  synth_cmd->add_option("--format", synth_format, "segments or edf")
      ->check(CLI::IsMember({"segments", "edf"}));

  cwat::PreprocessOptions prep;
  ConfigFlags prep_flags;
  auto* prep_cmd = app.add_subcommand("preprocess", "EDF directory -> segment cache");
  prep_cmd->add_option("--data", prep.data, "directory of .edf files")->required();
  prep_cmd->add_option("--out", prep.out, "segment cache directory")->required();
  prep_flags.add_to(prep_cmd, false);

  cwat::TrainOptions train;
  ConfigFlags train_flags;
  std::string init_checkpoint;
  auto* train_cmd = app.add_subcommand("train", "run one training phase");
  train_cmd->add_option("--data", train.data, "manifest or segment cache directory")->required();
  train_cmd->add_option("--checkpoint", init_checkpoint, "initialize from this checkpoint");
  train_cmd->add_option("--out", train.run_dir, "run directory (default runs/<timestamp>-<phase>)");
  train_flags.add_to(train_cmd, true);

  cwat::EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", eval.checkpoint)->required();
  eval_cmd->add_option("--data", eval.data, "manifest or segment cache directory")->required();
  eval_cmd->add_option("--out", eval.report, "report path (default beside the checkpoint)");
  eval_cmd->add_flag("--all", eval.all_segments, "score every segment, not just the validation split");

  ConfigFlags flops_flags;
  bool flops_json = false;
  auto* flops_cmd = app.add_subcommand("flops", "print the FLOPs / parameter report");
  flops_flags.add_to(flops_cmd, false);
  flops_cmd->add_flag("--json", flops_json);

  cwat::ExportOptions exp;
  auto* export_cmd = app.add_subcommand("export_latents", "write raw / reconstruction / latent CSVs");
  export_cmd->add_option("--checkpoint", exp.checkpoint)->required();
  export_cmd->add_option("--data", exp.data)->required();
  export_cmd->add_option("--out", exp.out)->required();
  export_cmd->add_option("--limit", exp.limit, "number of segments");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (synth_cmd->parsed()) {
      synth.edf = synth_format == "edf";
      const auto n = cwat::cmd_synth(synth);
      std::printf("wrote %zu %s to %s\n", n, synth.edf ? "EDF files" : "segments", synth.out.c_str());
    } else if (prep_cmd->parsed()) {
      prep.config = prep_flags.build({});
      const auto n = cwat::cmd_preprocess(prep);
      std::printf("wrote %zu segments to %s\n", n, prep.out.c_str());
    } else if (train_cmd->parsed()) {
      cwat::RunConfig base;
      if (!init_checkpoint.empty()) {
        train.init_checkpoint = init_checkpoint;
        base = cwat::load_model(init_checkpoint).config;
      }
      train.config = train_flags.build(base);
      const auto out = cwat::cmd_train(train);
      for (const auto& row : out.result.log) {
        std::printf("epoch %zu %-5s loss %.6f%s\n", row.epoch, row.split.c_str(), row.loss,
                    row.accuracy ? (" acc " + std::to_string(*row.accuracy)).c_str() : "");
      }
      std::printf("best epoch %zu; run directory %s\n", out.result.best_epoch, out.run_dir.c_str());
    } else if (eval_cmd->parsed()) {
      const auto out = cwat::cmd_eval(eval);
      std::cout << out.table << "report: " << out.report_path.string() << '\n';
    } else if (flops_cmd->parsed()) {
      const auto cfg = flops_flags.build({});
      std::cout << cwat::cmd_flops(cfg.model, flops_json);
    } else if (export_cmd->parsed()) {
      const auto n = cwat::cmd_export_latents(exp);
      std::printf("wrote %zu segment CSVs to %s\n", n, exp.out.c_str());
    }
  } catch (const cwat::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}

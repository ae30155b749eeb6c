#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cwat/evaluation.hpp"
#include "cwat/run_config.hpp"
#include "cwat/synth.hpp"
#include "cwat/training.hpp"

// Command implementations behind the `cwat` executable. Each reads its
// inputs, never modifies them, and writes its outputs under an output path.
namespace cwat {

inline constexpr const char* kManifestName = "manifest.tsv";
inline constexpr const char* kConfigName = "config.txt";
inline constexpr const char* kCheckpointName = "checkpoint.ck";
inline constexpr const char* kMetricsName = "metrics.csv";
inline constexpr const char* kReportName = "report.json";

// <root>/<timestamp>-<tag>, root = $CWAT_RUN_DIR or "runs". A numeric
// suffix is appended if the directory already exists.
std::filesystem::path make_run_dir(const std::string& tag);

// A manifest file, or a directory holding manifest.tsv.
std::filesystem::path resolve_manifest(const std::filesystem::path& data);

struct SynthOptions {
  SynthSpec spec;
  std::filesystem::path out;
  bool edf = false;  // EDF fixtures instead of the segment cache
};
// Returns the number of files written (segments or EDF recordings).
std::size_t cmd_synth(const SynthOptions& options);

struct PreprocessOptions {
  std::filesystem::path data;  // directory searched recursively for *.edf
  std::filesystem::path out;
  RunConfig config;
};
std::size_t cmd_preprocess(const PreprocessOptions& options);

struct TrainOptions {
  std::filesystem::path data;
  RunConfig config;
  std::optional<std::filesystem::path> init_checkpoint;
  std::filesystem::path run_dir;  // empty: make_run_dir(phase)
};

struct TrainOutcome {
  std::filesystem::path run_dir;
  TrainResult result;
  std::size_t train_segments = 0;
  std::size_t val_segments = 0;
};

// Splits by subject (train.seed, train.val_fraction), trains, and writes
// config.txt, checkpoint.ck and metrics.csv into the run directory.
TrainOutcome cmd_train(const TrainOptions& options);

// Same as cmd_train on in-memory segments, without touching the disk.
struct TrainedModel {
  ModelParams params;
  TrainResult result;
  SubjectSplit split;
};
TrainedModel train_on_segments(const std::vector<Segment>& segments, const RunConfig& config,
                               const ModelParams* init = nullptr);

struct EvalOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path data;
  std::filesystem::path report;  // empty: report.json beside the checkpoint
  bool all_segments = false;     // default: the validation split only
};

struct EvalOutcome {
  EvaluationReport report;
  std::filesystem::path report_path;
  std::string table;
};
EvalOutcome cmd_eval(const EvalOptions& options);

// Cost report for a preset or a config file; text table or JSON.
std::string cmd_flops(const ModelConfig& model, bool json);

struct ExportOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path data;
  std::filesystem::path out;
  std::size_t limit = 4;
};
// One CSV per segment with raw, reconstruction, latent and attention rows.
std::size_t cmd_export_latents(const ExportOptions& options);

// Reconstructs model config and parameters from a checkpoint file.
struct LoadedModel {
  RunConfig config;
  ModelParams params;
};
LoadedModel load_model(const std::filesystem::path& checkpoint);

}  // namespace cwat

#include "cwat/commands.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <future>
#include <sstream>

#include "cwat/checkpoint.hpp"
#include "cwat/cost.hpp"
#include "cwat/detail/binary_io.hpp"
#include "cwat/error.hpp"
#include "cwat/segment_cache.hpp"

namespace fs = std::filesystem;

namespace cwat {

namespace {

void write_text(const fs::path& path, const std::string& text) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(text.data());
  detail::write_file_bytes(path, std::span<const std::uint8_t>(p, text.size()));
}

void copy_model_values(const ModelParams& from, ModelParams& to) {
  auto cae = to.cae.named();
  load_params(from.cae.named(), cae, "cae");
  auto cls = to.classifier.named();
  load_params(from.classifier.named(), cls, "classifier");
}

std::vector<Segment> select(const std::vector<Segment>& all, const std::vector<std::size_t>& idx) {
  std::vector<Segment> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(all[i]);
  return out;
}

}  // namespace

fs::path make_run_dir(const std::string& tag) {
  const char* env = std::getenv("CWAT_RUN_DIR");
  const fs::path root = env && *env ? fs::path(env) : fs::path("runs");
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
  fs::path dir = root / (std::string(stamp) + "-" + tag);
  for (int n = 2; fs::exists(dir); ++n) {
    dir = root / (std::string(stamp) + "-" + tag + "-" + std::to_string(n));
  }
  fs::create_directories(dir);
  return dir;
}

fs::path resolve_manifest(const fs::path& data) {
  if (data.empty()) throw UsageError("--data is required");
  if (fs::is_directory(data)) return data / kManifestName;
  return data;
}

std::size_t cmd_synth(const SynthOptions& options) {
  if (options.out.empty()) throw UsageError("synth: --out is required");
  options.spec.validate();
  if (options.edf) {
    for (std::size_t i = 0; i < options.spec.n_cases; ++i) {
      const auto c = generate_case(options.spec, i);
      const auto dir = options.out / std::string(label_name(c.label));
      fs::create_directories(dir);
      write_edf_file(dir / (c.case_id + ".edf"), to_edf(c));
    }
    return options.spec.n_cases;
  }
  const auto segments = synth_segments(options.spec);
  const auto entries = write_segment_cache(options.out, segments);
  write_manifest(options.out / kManifestName, entries);
  return entries.size();
}

std::size_t cmd_preprocess(const PreprocessOptions& options) {
  if (options.data.empty() || options.out.empty()) {
    throw UsageError("preprocess: --data and --out are required");
  }
  if (!fs::is_directory(options.data)) {
    throw IoError("preprocess: " + options.data.string() + " is not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(options.data)) {
    if (e.is_regular_file() && (e.path().extension() == ".edf" || e.path().extension() == ".EDF")) {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("preprocess: no .edf files under " + options.data.string());

  auto process = [&](const fs::path& file) {
    const auto edf = read_edf_file(file);
    const auto label = infer_edf_label(edf.header, file);
    if (!label) throw DataError("preprocess: cannot determine the label of " + file.string());
    const std::string subject = edf.header.patient_id.empty() ? file.stem().string()
                                                              : edf.header.patient_id.substr(0, edf.header.patient_id.find(' '));
    const auto rec = select_montage(to_recording(edf, subject, label));
    return preprocess_recording(rec, options.config.preprocess, file.stem().string());
  };

  const std::size_t workers = std::max<std::size_t>(1, options.config.workers);
  std::vector<std::vector<Segment>> results(files.size());
  for (std::size_t start = 0; start < files.size(); start += workers) {
    std::vector<std::future<std::vector<Segment>>> jobs;
    const std::size_t end = std::min(files.size(), start + workers);
    for (std::size_t i = start; i < end; ++i) {
      jobs.push_back(std::async(workers == 1 ? std::launch::deferred : std::launch::async, process, files[i]));
    }
    for (std::size_t i = start; i < end; ++i) results[i] = jobs[i - start].get();
  }
  std::vector<Segment> all;
  for (auto& r : results) {
    for (auto& s : r) all.push_back(std::move(s));
  }
  const auto entries = write_segment_cache(options.out, all);
  write_manifest(options.out / kManifestName, entries);
  write_text(options.out / kConfigName, options.config.to_text());
  return entries.size();
}

TrainedModel train_on_segments(const std::vector<Segment>& segments, const RunConfig& config,
                               const ModelParams* init) {
  if (segments.empty()) throw DataError("train: no segments");
  TrainedModel out;
  out.split = split_by_subject(std::span<const Segment>(segments), config.train.val_fraction,
                               config.train.seed);
  out.params = init_model(config.model, config.train.seed);
  if (init) copy_model_values(*init, out.params);
  const auto train_set = select(segments, out.split.train);
  const auto val_set = select(segments, out.split.val);
  out.result = train(train_set, val_set, config.model, out.params, config.train);
  return out;
}

TrainOutcome cmd_train(const TrainOptions& options) {
  const auto segments = load_manifest_segments(resolve_manifest(options.data));
  std::optional<ModelParams> init;
  if (options.init_checkpoint) init = load_model(*options.init_checkpoint).params;
  TrainOutcome outcome;
  outcome.run_dir = options.run_dir.empty()
                        ? make_run_dir(std::string(phase_name(options.config.train.phase)))
                        : options.run_dir;
  fs::create_directories(outcome.run_dir);
  const auto text = options.config.to_text();
  write_text(outcome.run_dir / kConfigName, text);
  auto trained = train_on_segments(segments, options.config, init ? &*init : nullptr);
  write_metrics_csv(outcome.run_dir / kMetricsName, trained.result.log);
  write_checkpoint(outcome.run_dir / kCheckpointName,
                   make_checkpoint(text, trained.params, &trained.result.adam));
  outcome.train_segments = trained.split.train.size();
  outcome.val_segments = trained.split.val.size();
  outcome.result = std::move(trained.result);
  return outcome;
}

LoadedModel load_model(const fs::path& checkpoint) {
  if (!fs::exists(checkpoint)) throw IoError("checkpoint " + checkpoint.string() + " does not exist");
  const auto ck = read_checkpoint(checkpoint);
  LoadedModel out;
  out.config = parse_run_config(ck.config_text);
  out.params = init_model(out.config.model, out.config.train.seed);
  load_model_params(ck, out.params);
  return out;
}

EvalOutcome cmd_eval(const EvalOptions& options) {
  if (options.checkpoint.empty()) throw UsageError("eval: --checkpoint is required");
  const auto model = load_model(options.checkpoint);
  const auto segments = load_manifest_segments(resolve_manifest(options.data));
  std::vector<Segment> eval_set;
  if (options.all_segments) {
    eval_set = segments;
  } else {
    const auto split = split_by_subject(std::span<const Segment>(segments),
                                        model.config.train.val_fraction, model.config.train.seed);
    eval_set = select(segments, split.val);
  }
  const auto preds = predict_segments(eval_set, model.params, model.config.model);
  EvalOutcome out;
  out.report = evaluate_predictions(preds);
  const auto cost = model_cost(model.config.model.cae, model.config.model.transformer);
  out.report_path = options.report.empty() ? options.checkpoint.parent_path() / kReportName : options.report;
  write_text(out.report_path, report_json(out.report, &cost).dump(2) + "\n");
  out.table = format_metrics_table(out.report);
  return out;
}

std::string cmd_flops(const ModelConfig& model, bool json) {
  const auto report = model_cost(model.cae, model.transformer);
  if (json) return cost_json(report).dump(2) + "\n";
  return format_cost_table(report);
}

namespace {

void write_row(std::ostream& os, const std::string& kind, std::size_t index, std::span<const double> values) {
  os << kind << ',' << index;
  char buf[32];
  for (double v : values) {
    std::snprintf(buf, sizeof buf, ",%.9g", v);
    os << buf;
  }
  os << '\n';
}

void write_matrix_rows(std::ostream& os, const std::string& kind, const Tensor& t) {
  const std::size_t rows = t.dim(0), cols = t.dim(1);
  for (std::size_t r = 0; r < rows; ++r) write_row(os, kind, r, t.data().subspan(r * cols, cols));
}

}  // namespace

std::size_t cmd_export_latents(const ExportOptions& options) {
  if (options.checkpoint.empty() || options.out.empty()) {
    throw UsageError("export_latents: --checkpoint and --out are required");
  }
  const auto model = load_model(options.checkpoint);
  const auto segments = load_manifest_segments(resolve_manifest(options.data));
  const std::size_t n = std::min(options.limit, segments.size());
  NoGradGuard no_grad;
  Rng unused(0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& seg = segments[i];
    const Tensor z = encode(seg.data, model.params.cae, model.config.model.cae);
    const Tensor recon = decode(z, model.params.cae, model.config.model.cae);
    std::vector<Tensor> attention;
    classify(z, model.params.classifier, model.config.model.transformer, false, unused, &attention);
    std::ostringstream os;
    os << "# kind,row,values... case=" << seg.case_id << " segment=" << seg.segment_index
       << " label=" << label_name(seg.label) << '\n';
    write_matrix_rows(os, "raw", seg.data);
    write_matrix_rows(os, "reconstruction", recon);
    write_matrix_rows(os, "latent", z);
    for (std::size_t l = 0; l < attention.size(); ++l) {
      write_matrix_rows(os, "attention." + std::to_string(l), attention[l]);
    }
    write_text(options.out / (seg.case_id + "_" + std::to_string(seg.segment_index) + ".csv"), os.str());
  }
  return n;
}

}  // namespace cwat

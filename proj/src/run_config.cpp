#include "cwat/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "cwat/error.hpp"

namespace cwat {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string fmt(std::size_t v) { return std::to_string(v); }

double parse_double(std::string_view key, std::string_view text) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) {
    throw ConfigError("config key '" + std::string(key) + "': '" + std::string(text) +
                      "' is not a number");
  }
  return v;
}

std::uint64_t parse_uint(std::string_view key, std::string_view text) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) {
    throw ConfigError("config key '" + std::string(key) + "': '" + std::string(text) +
                      "' is not a non-negative integer");
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("config key '" + std::string(key) + "': expected true or false");
}

std::vector<std::size_t> parse_list(std::string_view key, std::string_view text) {
  std::vector<std::size_t> out;
  if (trim(text).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    out.push_back(parse_uint(key, trim(text.substr(start, comma - start))));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename F>
std::string join_stages(const std::vector<ConvStage>& stages, F field) {
  std::string out;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(field(stages[i]));
  }
  return out;
}

void set_stage_field(std::vector<ConvStage>& stages, std::string_view key, std::string_view text,
                     std::size_t ConvStage::*field) {
  const auto values = parse_list(key, text);
  if (values.size() != stages.size()) stages.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) stages[i].*field = values[i];
}

struct Entry {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view, std::string_view)> set;
};

const std::map<std::string, Entry, std::less<>>& registry() {
  static const std::map<std::string, Entry, std::less<>> table = [] {
    std::map<std::string, Entry, std::less<>> t;
    auto size_field = [&t](std::string name, auto member) {
      t[name] = {[member](const RunConfig& c) { return fmt(member(const_cast<RunConfig&>(c))); },
                 [member](RunConfig& c, std::string_view k, std::string_view v) {
                   member(c) = static_cast<std::size_t>(parse_uint(k, v));
                 }};
    };
    auto double_field = [&t](std::string name, auto member) {
      t[name] = {[member](const RunConfig& c) { return fmt(member(const_cast<RunConfig&>(c))); },
                 [member](RunConfig& c, std::string_view k, std::string_view v) {
                   member(c) = parse_double(k, v);
                 }};
    };
    size_field("cae.channels", [](RunConfig& c) -> std::size_t& { return c.model.cae.channels; });
    size_field("cae.input_length", [](RunConfig& c) -> std::size_t& { return c.model.cae.input_length; });
    t["cae.kernel_sizes"] = {
        [](const RunConfig& c) { return join_stages(c.model.cae.stages, [](const ConvStage& s) { return s.kernel_size; }); },
        [](RunConfig& c, std::string_view k, std::string_view v) { set_stage_field(c.model.cae.stages, k, v, &ConvStage::kernel_size); }};
    t["cae.strides"] = {
        [](const RunConfig& c) { return join_stages(c.model.cae.stages, [](const ConvStage& s) { return s.stride; }); },
        [](RunConfig& c, std::string_view k, std::string_view v) { set_stage_field(c.model.cae.stages, k, v, &ConvStage::stride); }};
    t["cae.feature_multipliers"] = {
        [](const RunConfig& c) { return join_stages(c.model.cae.stages, [](const ConvStage& s) { return s.feature_multiplier; }); },
        [](RunConfig& c, std::string_view k, std::string_view v) { set_stage_field(c.model.cae.stages, k, v, &ConvStage::feature_multiplier); }};
    size_field("transformer.model_dim", [](RunConfig& c) -> std::size_t& { return c.model.transformer.model_dim; });
    size_field("transformer.key_dim", [](RunConfig& c) -> std::size_t& { return c.model.transformer.key_dim; });
    size_field("transformer.ff_dim", [](RunConfig& c) -> std::size_t& { return c.model.transformer.ff_dim; });
    size_field("transformer.n_layers", [](RunConfig& c) -> std::size_t& { return c.model.transformer.n_layers; });
    double_field("transformer.dropout", [](RunConfig& c) -> double& { return c.model.transformer.dropout_rate; });
    double_field("train.lr", [](RunConfig& c) -> double& { return c.train.lr; });
    double_field("train.weight_decay", [](RunConfig& c) -> double& { return c.train.weight_decay; });
    size_field("train.batch_size", [](RunConfig& c) -> std::size_t& { return c.train.batch_size; });
    size_field("train.epochs", [](RunConfig& c) -> std::size_t& { return c.train.epochs; });
    size_field("train.warmup_steps", [](RunConfig& c) -> std::size_t& { return c.train.warmup_steps; });
    t["train.seed"] = {[](const RunConfig& c) { return std::to_string(c.train.seed); },
                       [](RunConfig& c, std::string_view k, std::string_view v) { c.train.seed = parse_uint(k, v); }};
    double_field("train.val_fraction", [](RunConfig& c) -> double& { return c.train.val_fraction; });
    t["train.phase"] = {[](const RunConfig& c) { return std::string(phase_name(c.train.phase)); },
                        [](RunConfig& c, std::string_view, std::string_view v) { c.train.phase = parse_phase(v); }};
    t["train.freeze_encoder"] = {
        [](const RunConfig& c) { return std::string(c.train.freeze_encoder ? "true" : "false"); },
        [](RunConfig& c, std::string_view k, std::string_view v) { c.train.freeze_encoder = parse_bool(k, v); }};
    t["train.decoupled_weight_decay"] = {
        [](const RunConfig& c) { return std::string(c.train.decoupled_weight_decay ? "true" : "false"); },
        [](RunConfig& c, std::string_view k, std::string_view v) { c.train.decoupled_weight_decay = parse_bool(k, v); }};
    double_field("preprocess.target_rate_hz", [](RunConfig& c) -> double& { return c.preprocess.target_rate_hz; });
    double_field("preprocess.window_seconds", [](RunConfig& c) -> double& { return c.preprocess.window_seconds; });
    double_field("preprocess.min_duration_seconds", [](RunConfig& c) -> double& { return c.preprocess.min_duration_seconds; });
    size_field("preprocess.fir_taps", [](RunConfig& c) -> std::size_t& { return c.preprocess.fir_taps; });
    double_field("preprocess.cutoff_fraction", [](RunConfig& c) -> double& { return c.preprocess.cutoff_fraction; });
    size_field("run.workers", [](RunConfig& c) -> std::size_t& { return c.workers; });
    return t;
  }();
  return table;
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
  const auto& table = registry();
  auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  it->second.set(*this, key, trim(value));
}

std::vector<std::string> RunConfig::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : registry()) out.push_back(k);
  return out;
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& [k, e] : registry()) out += k + " = " + e.get(*this) + "\n";
  return out;
}

RunConfig parse_run_config(std::string_view text, const RunConfig& base) {
  RunConfig cfg = base;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = trim(text.substr(start, end - start));
    ++line_no;
    start = end + 1;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return cfg;
}

RunConfig read_run_config(const std::filesystem::path& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), base);
}

ModelConfig model_preset(std::string_view name) {
  ModelConfig m;
  if (name == "desk" || name == "default") return m;
  if (name == "paper-defaults") {
    m.cae.stages = {{7, 4, 16}, {7, 4, 16}, {7, 4, 1}};
    m.transformer = {512, 512, 1536, 1, 0.1};
    return m;
  }
  throw ConfigError("unknown preset '" + std::string(name) +
                    "' (expected desk or paper-defaults)");
}

}  // namespace cwat

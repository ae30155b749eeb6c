#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cwat/model.hpp"
#include "cwat/preprocess.hpp"
#include "cwat/training.hpp"

namespace cwat {

// Every tunable of a run. Text form: one "key = value" per line, '#'
// comments, keys sorted; lists are comma-separated.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  PreprocessConfig preprocess;
  std::size_t workers = 1;

  // Applies one key; unknown keys and malformed values raise ConfigError.
  void set(std::string_view key, std::string_view value);
  std::string to_text() const;
  std::vector<std::string> keys() const;
};

// Starts from `base` and applies every assignment in `text`.
RunConfig parse_run_config(std::string_view text, const RunConfig& base = {});
RunConfig read_run_config(const std::filesystem::path& path, const RunConfig& base = {});

// Named model presets: "desk" (library defaults), "paper-defaults" (the
// heavier configuration sized against the published cost figures) and
// "raw-input-transformer" is handled by the cost report.
ModelConfig model_preset(std::string_view name);

}  // namespace cwat

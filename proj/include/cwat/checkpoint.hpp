#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cwat/model.hpp"
#include "cwat/training.hpp"

namespace cwat {

// Binary checkpoint: "CWCK", u16 version, u32-prefixed canonical config
// text, u32 section count, then per section a u16-prefixed name, u32 tensor
// count and per tensor a u16-prefixed name, u32 rank, u64 dims and
// little-endian float64 values.
inline constexpr std::uint16_t kCheckpointVersion = 1;

struct CheckpointSection {
  std::string name;
  ParamList tensors;
};

struct Checkpoint {
  std::string config_text;
  std::vector<CheckpointSection> sections;

  const CheckpointSection* find(std::string_view name) const;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint read_checkpoint(const std::filesystem::path& path);

// Sections "cae", "classifier" and, when the state is non-empty, "adam"
// (tensors "<param>.m", "<param>.v" and a scalar "step").
Checkpoint make_checkpoint(const std::string& config_text, const ModelParams& params,
                           const AdamState* adam = nullptr);

// Copies values by name into `dst`; every destination tensor must be
// present with an identical shape.
void load_params(const ParamList& src, ParamList& dst, const std::string& section);
void load_model_params(const Checkpoint& ck, ModelParams& params);
AdamState load_adam_state(const Checkpoint& ck);

}  // namespace cwat

#include <map>

#include "cwat/checkpoint.hpp"
#include "cwat/detail/binary_io.hpp"
#include "cwat/error.hpp"

namespace cwat {

const CheckpointSection* Checkpoint::find(std::string_view name) const {
  for (const auto& s : sections) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck) {
  detail::ByteWriter w;
  w.bytes("CWCK");
  w.uint<std::uint16_t>(kCheckpointVersion);
  w.text32(ck.config_text);
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(ck.sections.size()));
  for (const auto& section : ck.sections) {
    w.text16(section.name);
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(section.tensors.size()));
    for (const auto& t : section.tensors) {
      w.text16(t.name);
      w.uint<std::uint32_t>(static_cast<std::uint32_t>(t.tensor.rank()));
      for (std::size_t d : t.tensor.shape()) w.uint<std::uint64_t>(d);
      w.f64s(t.tensor.data());
    }
  }
  return std::move(w.buffer());
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "checkpoint");
  if (r.bytes(4) != "CWCK") throw DataError("checkpoint: bad magic (expected CWCK)");
  const auto version = r.uint<std::uint16_t>();
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint ck;
  ck.config_text = r.text32();
  const auto n_sections = r.uint<std::uint32_t>();
  for (std::uint32_t s = 0; s < n_sections; ++s) {
    CheckpointSection section;
    section.name = r.text16();
    const auto n_tensors = r.uint<std::uint32_t>();
    for (std::uint32_t t = 0; t < n_tensors; ++t) {
      std::string name = r.text16();
      const auto rank = r.uint<std::uint32_t>();
      if (rank > 8) throw DataError("checkpoint: tensor '" + name + "' has implausible rank");
      Shape shape;
      std::uint64_t numel = 1;
      for (std::uint32_t d = 0; d < rank; ++d) {
        shape.push_back(static_cast<std::size_t>(r.uint<std::uint64_t>()));
        numel *= shape.back();
      }
      if (numel > r.remaining() / 8) {
        throw DataError("checkpoint: tensor '" + name + "' extends past end of file");
      }
      std::vector<double> data(static_cast<std::size_t>(numel));
      for (auto& v : data) v = r.f64();
      section.tensors.push_back({std::move(name), Tensor(std::move(shape), std::move(data))});
    }
    ck.sections.push_back(std::move(section));
  }
  if (r.remaining() != 0) throw DataError("checkpoint: trailing bytes after last section");
  return ck;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  detail::write_file_bytes(path, encode_checkpoint(ck));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(detail::read_file_bytes(path));
}

namespace {

ParamList detached(const ParamList& params) {
  ParamList out;
  for (const auto& p : params) out.push_back({p.name, p.tensor.detach()});
  return out;
}

}  // namespace

Checkpoint make_checkpoint(const std::string& config_text, const ModelParams& params,
                           const AdamState* adam) {
  Checkpoint ck;
  ck.config_text = config_text;
  ck.sections.push_back({"cae", detached(params.cae.named())});
  ck.sections.push_back({"classifier", detached(params.classifier.named())});
  if (adam && !adam->names.empty()) {
    CheckpointSection s{"adam", {}};
    s.tensors.push_back({"step", Tensor::scalar(static_cast<double>(adam->step))});
    for (std::size_t i = 0; i < adam->names.size(); ++i) {
      s.tensors.push_back({adam->names[i] + ".m", Tensor::vector(adam->m[i])});
      s.tensors.push_back({adam->names[i] + ".v", Tensor::vector(adam->v[i])});
    }
    ck.sections.push_back(std::move(s));
  }
  return ck;
}

void load_params(const ParamList& src, ParamList& dst, const std::string& section) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& p : src) by_name[p.name] = &p.tensor;
  for (auto& p : dst) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) {
      throw DataError("checkpoint section '" + section + "' lacks tensor '" + p.name + "'");
    }
    if (it->second->shape() != p.tensor.shape()) {
      throw DataError("checkpoint tensor '" + p.name + "' has shape " +
                      shape_str(it->second->shape()) + ", model expects " +
                      shape_str(p.tensor.shape()));
    }
    auto values = it->second->data();
    auto out = p.tensor.mutable_data();
    std::copy(values.begin(), values.end(), out.begin());
  }
}

void load_model_params(const Checkpoint& ck, ModelParams& params) {
  for (const char* name : {"cae", "classifier"}) {
    if (!ck.find(name)) throw DataError(std::string("checkpoint has no '") + name + "' section");
  }
  auto cae = params.cae.named();
  load_params(ck.find("cae")->tensors, cae, "cae");
  auto cls = params.classifier.named();
  load_params(ck.find("classifier")->tensors, cls, "classifier");
}

AdamState load_adam_state(const Checkpoint& ck) {
  AdamState state;
  const auto* s = ck.find("adam");
  if (!s) return state;
  for (const auto& t : s->tensors) {
    if (t.name == "step") {
      state.step = static_cast<std::uint64_t>(t.tensor.item());
    } else if (t.name.ends_with(".m")) {
      state.names.push_back(t.name.substr(0, t.name.size() - 2));
      state.m.emplace_back(t.tensor.data().begin(), t.tensor.data().end());
    } else if (t.name.ends_with(".v")) {
      state.v.emplace_back(t.tensor.data().begin(), t.tensor.data().end());
    }
  }
  if (state.m.size() != state.v.size()) throw DataError("checkpoint: adam moments are unpaired");
  return state;
}

}  // namespace cwat

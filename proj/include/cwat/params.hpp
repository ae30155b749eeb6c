#pragma once

#include <string>
#include <vector>

#include "cwat/tensor.hpp"

namespace cwat {

// Ordered named handles onto learnable tensors. Copying a ParamList shares
// the tensors; it does not clone them.
struct NamedTensor {
  std::string name;
  Tensor tensor;
};

using ParamList = std::vector<NamedTensor>;

inline std::size_t count_parameters(const ParamList& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor.numel();
  return n;
}

inline void zero_grads(ParamList& params) {
  for (auto& p : params) p.tensor.zero_grad();
}

inline void set_trainable(ParamList& params, bool flag) {
  for (auto& p : params) p.tensor.set_requires_grad(flag);
}

// Deep copy (independent storage, no grads).
inline ParamList clone(const ParamList& params) {
  ParamList out;
  out.reserve(params.size());
  for (const auto& p : params) {
    auto t = p.tensor.detach();
    t.set_requires_grad(p.tensor.requires_grad());
    out.push_back({p.name, t});
  }
  return out;
}

}  // namespace cwat

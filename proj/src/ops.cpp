#include "cwat/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cwat/error.hpp"

namespace cwat {

namespace {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;
using Rule = std::function<void(Node&)>;

bool any_requires_grad(const std::vector<NodePtr>& inputs) {
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const NodePtr& n) { return n->requires_grad; });
}

// Builds the result node and records it when a tape is listening.
template <typename MakeRule>
Tensor finish(Shape shape, std::vector<double> data, std::vector<NodePtr> inputs,
              MakeRule&& make_rule) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  Tape* tape = Tape::active();
  if (tape != nullptr && any_requires_grad(inputs)) {
    node->requires_grad = true;
    node->backward = make_rule();
    node->inputs = std::move(inputs);
    tape->record(node);
  }
  return Tensor(std::move(node));
}

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* arg) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": " + arg + " must have rank " +
                         std::to_string(rank) + ", got shape " + shape_str(t.shape()));
  }
}

std::size_t inner_length(const Tensor& t, const char* op) {
  if (t.rank() == 0) throw DimensionError(std::string(op) + ": scalar input has no last axis");
  return t.shape().back();
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul", "lhs");
  require_rank(b, 2, "matmul", "rhs");
  const std::size_t n = a.dim(0), d = a.dim(1), k = b.dim(1);
  if (b.dim(0) != d) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_str(a.shape()) +
                         " x " + shape_str(b.shape()));
  }
  const auto A = a.data();
  const auto B = b.data();
  std::vector<double> out(n * k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double* row = out.data() + i * k;
    for (std::size_t p = 0; p < d; ++p) {
      const double aip = A[i * d + p];
      const double* brow = B.data() + p * k;
      for (std::size_t j = 0; j < k; ++j) row[j] += aip * brow[j];
    }
  }
  auto na = a.node(), nb = b.node();
  return finish({n, k}, std::move(out), {na, nb}, [=] {
    return [na, nb, n, d, k](Node& self) {
      const auto& G = self.grad;
      if (na->requires_grad) {
        auto& ga = na->grad_buffer();
        // dA = dC * B^T
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t p = 0; p < d; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < k; ++j) acc += G[i * k + j] * nb->data[p * k + j];
            ga[i * d + p] += acc;
          }
      }
      if (nb->requires_grad) {
        auto& gb = nb->grad_buffer();
        // dB = A^T * dC
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t p = 0; p < d; ++p) {
            const double aip = na->data[i * d + p];
            double* grow = gb.data() + p * k;
            for (std::size_t j = 0; j < k; ++j) grow[j] += aip * G[i * k + j];
          }
      }
    };
  });
}

Tensor transpose(const Tensor& a) {
  require_rank(a, 2, "transpose", "input");
  const std::size_t n = a.dim(0), k = a.dim(1);
  const auto A = a.data();
  std::vector<double> out(n * k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) out[j * n + i] = A[i * k + j];
  auto na = a.node();
  return finish({k, n}, std::move(out), {na}, [=] {
    return [na, n, k](Node& self) {
      auto& ga = na->grad_buffer();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) ga[i * k + j] += self.grad[j * n + i];
    };
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("add: shapes differ, " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
  const auto A = a.data();
  const auto B = b.data();
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] + B[i];
  auto na = a.node(), nb = b.node();
  return finish(a.shape(), std::move(out), {na, nb}, [=] {
    return [na, nb](Node& self) {
      for (auto* in : {na.get(), nb.get()}) {
        if (!in->requires_grad) continue;
        auto& g = in->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
      }
    };
  });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  const std::size_t k = inner_length(x, "add_bias");
  if (bias.rank() != 1 || bias.dim(0) != k) {
    throw DimensionError("add_bias: bias " + shape_str(bias.shape()) +
                         " does not match last axis of " + shape_str(x.shape()));
  }
  const auto X = x.data();
  const auto Bv = bias.data();
  std::vector<double> out(X.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = X[i] + Bv[i % k];
  auto nx = x.node(), nb = bias.node();
  return finish(x.shape(), std::move(out), {nx, nb}, [=] {
    return [nx, nb, k](Node& self) {
      if (nx->requires_grad) {
        auto& g = nx->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
      }
      if (nb->requires_grad) {
        auto& g = nb->grad_buffer();
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i % k] += self.grad[i];
      }
    };
  });
}

Tensor scale(const Tensor& x, double factor) {
  const auto X = x.data();
  std::vector<double> out(X.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = X[i] * factor;
  auto nx = x.node();
  return finish(x.shape(), std::move(out), {nx}, [=] {
    return [nx, factor](Node& self) {
      auto& g = nx->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * factor;
    };
  });
}

Tensor relu(const Tensor& x) {
  const auto X = x.data();
  std::vector<double> out(X.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = X[i] > 0.0 ? X[i] : 0.0;
  auto nx = x.node();
  return finish(x.shape(), std::move(out), {nx}, [=] {
    return [nx](Node& self) {
      auto& g = nx->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i)
        if (nx->data[i] > 0.0) g[i] += self.grad[i];
    };
  });
}

Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ConfigError("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  const double keep = 1.0 - rate;
  std::vector<double> mask(x.numel());
  for (auto& m : mask) m = uniform01(rng) < keep ? 1.0 / keep : 0.0;
  const auto X = x.data();
  std::vector<double> out(X.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = X[i] * mask[i];
  auto nx = x.node();
  return finish(x.shape(), std::move(out), {nx}, [&] {
    return [nx, mask = std::move(mask)](Node& self) {
      auto& g = nx->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * mask[i];
    };
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + shape_str(x.shape()) + " as " +
                         shape_str(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  auto nx = x.node();
  return finish(std::move(shape), std::move(out), {nx}, [=] {
    return [nx](Node& self) {
      auto& g = nx->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    };
  });
}

Tensor conv1d_grouped(const Tensor& input, const Tensor& kernel, std::size_t groups,
                      std::size_t stride, std::size_t padding) {
  require_rank(input, 2, "conv1d_grouped", "input");
  require_rank(kernel, 3, "conv1d_grouped", "kernel");
  const std::size_t M = input.dim(0), L = input.dim(1);
  const std::size_t N = kernel.dim(0), Kin = kernel.dim(1), K = kernel.dim(2);
  if (groups == 0 || stride == 0) throw ConfigError("conv1d_grouped: groups and stride must be >= 1");
  if (M % groups != 0 || N % groups != 0) {
    throw ConfigError("conv1d_grouped: " + std::to_string(M) + " input / " +
                      std::to_string(N) + " output channels not divisible by groups=" +
                      std::to_string(groups));
  }
  if (Kin != M / groups) {
    throw DimensionError("conv1d_grouped: kernel " + shape_str(kernel.shape()) +
                         " expects " + std::to_string(Kin * groups) +
                         " input channels, input is " + shape_str(input.shape()));
  }
  if (L + 2 * padding < K) {
    throw DimensionError("conv1d_grouped: output length < 1 for input " +
                         shape_str(input.shape()) + " and kernel " + shape_str(kernel.shape()));
  }
  const std::size_t Lout = (L + 2 * padding - K) / stride + 1;
  const std::size_t in_per_group = M / groups, out_per_group = N / groups;
  const auto X = input.data();
  const auto W = kernel.data();
  std::vector<double> out(N * Lout, 0.0);

  // Valid output range for tap k: t*stride + k - padding in [0, L).
  auto t_range = [=](std::size_t k) {
    const long off = static_cast<long>(k) - static_cast<long>(padding);
    long lo = 0;
    if (off < 0) lo = (-off + static_cast<long>(stride) - 1) / static_cast<long>(stride);
    long hi = (static_cast<long>(L) - 1 - off);
    hi = hi < 0 ? -1 : hi / static_cast<long>(stride);
    hi = std::min(hi, static_cast<long>(Lout) - 1);
    return std::pair<long, long>{lo, hi};
  };

  for (std::size_t o = 0; o < N; ++o) {
    const std::size_t g = o / out_per_group;
    double* y = out.data() + o * Lout;
    for (std::size_t ic = 0; ic < in_per_group; ++ic) {
      const double* x = X.data() + (g * in_per_group + ic) * L;
      const double* w = W.data() + (o * in_per_group + ic) * K;
      for (std::size_t k = 0; k < K; ++k) {
        const auto [lo, hi] = t_range(k);
        const long off = static_cast<long>(k) - static_cast<long>(padding);
        const double wk = w[k];
        for (long t = lo; t <= hi; ++t) y[t] += wk * x[t * static_cast<long>(stride) + off];
      }
    }
  }

  auto nx = input.node(), nw = kernel.node();
  return finish({N, Lout}, std::move(out), {nx, nw}, [=] {
    return [=](Node& self) {
      const auto& G = self.grad;
      for (std::size_t o = 0; o < N; ++o) {
        const std::size_t g = o / out_per_group;
        const double* dy = G.data() + o * Lout;
        for (std::size_t ic = 0; ic < in_per_group; ++ic) {
          const std::size_t i = g * in_per_group + ic;
          const std::size_t wbase = (o * in_per_group + ic) * K;
          for (std::size_t k = 0; k < K; ++k) {
            const auto [lo, hi] = t_range(k);
            const long off = static_cast<long>(k) - static_cast<long>(padding);
            const long s = static_cast<long>(stride);
            if (nx->requires_grad) {
              double* dx = nx->grad_buffer().data() + i * L;
              const double wk = nw->data[wbase + k];
              for (long t = lo; t <= hi; ++t) dx[t * s + off] += wk * dy[t];
            }
            if (nw->requires_grad) {
              const double* x = nx->data.data() + i * L;
              double acc = 0.0;
              for (long t = lo; t <= hi; ++t) acc += dy[t] * x[t * s + off];
              nw->grad_buffer()[wbase + k] += acc;
            }
          }
        }
      }
    };
  });
}

Tensor conv_transpose1d_grouped(const Tensor& input, const Tensor& kernel,
                                std::size_t groups, std::size_t stride,
                                std::size_t padding, std::size_t output_padding) {
  require_rank(input, 2, "conv_transpose1d_grouped", "input");
  require_rank(kernel, 3, "conv_transpose1d_grouped", "kernel");
  const std::size_t M = input.dim(0), L = input.dim(1);
  const std::size_t Mk = kernel.dim(0), out_per_group = kernel.dim(1), K = kernel.dim(2);
  if (groups == 0 || stride == 0) {
    throw ConfigError("conv_transpose1d_grouped: groups and stride must be >= 1");
  }
  if (M % groups != 0) {
    throw ConfigError("conv_transpose1d_grouped: " + std::to_string(M) +
                      " input channels not divisible by groups=" + std::to_string(groups));
  }
  if (Mk != M) {
    throw DimensionError("conv_transpose1d_grouped: kernel " + shape_str(kernel.shape()) +
                         " does not match input " + shape_str(input.shape()));
  }
  if (output_padding >= stride && output_padding > 0) {
    throw ConfigError("conv_transpose1d_grouped: output_padding must be < stride");
  }
  const long full = static_cast<long>((L - 1) * stride + K + output_padding);
  const long Lout_signed = full - 2 * static_cast<long>(padding);
  if (L == 0 || Lout_signed < 1) {
    throw DimensionError("conv_transpose1d_grouped: output length < 1 for input " +
                         shape_str(input.shape()));
  }
  const std::size_t Lout = static_cast<std::size_t>(Lout_signed);
  const std::size_t in_per_group = M / groups;
  const std::size_t N = out_per_group * groups;
  const auto X = input.data();
  const auto W = kernel.data();
  std::vector<double> out(N * Lout, 0.0);

  // Input t, tap k lands on output t*stride + k - padding.
  auto t_range = [=](std::size_t k) {
    const long off = static_cast<long>(k) - static_cast<long>(padding);
    const long s = static_cast<long>(stride);
    long lo = 0;
    if (off < 0) lo = (-off + s - 1) / s;
    long hi = static_cast<long>(Lout) - 1 - off;
    hi = hi < 0 ? -1 : hi / s;
    hi = std::min(hi, static_cast<long>(L) - 1);
    return std::pair<long, long>{lo, hi};
  };

  for (std::size_t i = 0; i < M; ++i) {
    const std::size_t g = i / in_per_group;
    const double* x = X.data() + i * L;
    for (std::size_t oc = 0; oc < out_per_group; ++oc) {
      double* y = out.data() + (g * out_per_group + oc) * Lout;
      const double* w = W.data() + (i * out_per_group + oc) * K;
      for (std::size_t k = 0; k < K; ++k) {
        const auto [lo, hi] = t_range(k);
        const long off = static_cast<long>(k) - static_cast<long>(padding);
        const long s = static_cast<long>(stride);
        const double wk = w[k];
        for (long t = lo; t <= hi; ++t) y[t * s + off] += wk * x[t];
      }
    }
  }

  auto nx = input.node(), nw = kernel.node();
  return finish({N, Lout}, std::move(out), {nx, nw}, [=] {
    return [=](Node& self) {
      const auto& G = self.grad;
      const long s = static_cast<long>(stride);
      for (std::size_t i = 0; i < M; ++i) {
        const std::size_t g = i / in_per_group;
        for (std::size_t oc = 0; oc < out_per_group; ++oc) {
          const double* dy = G.data() + (g * out_per_group + oc) * Lout;
          const std::size_t wbase = (i * out_per_group + oc) * K;
          for (std::size_t k = 0; k < K; ++k) {
            const auto [lo, hi] = t_range(k);
            const long off = static_cast<long>(k) - static_cast<long>(padding);
            if (nx->requires_grad) {
              double* dx = nx->grad_buffer().data() + i * L;
              const double wk = nw->data[wbase + k];
              for (long t = lo; t <= hi; ++t) dx[t] += wk * dy[t * s + off];
            }
            if (nw->requires_grad) {
              const double* x = nx->data.data() + i * L;
              double acc = 0.0;
              for (long t = lo; t <= hi; ++t) acc += x[t] * dy[t * s + off];
              nw->grad_buffer()[wbase + k] += acc;
            }
          }
        }
      }
    };
  });
}

Tensor subsample(const Tensor& x, std::size_t stride) {
  require_rank(x, 2, "subsample", "input");
  if (stride == 0) throw ConfigError("subsample: stride must be >= 1");
  const std::size_t M = x.dim(0), L = x.dim(1);
  if (L == 0) throw DimensionError("subsample: empty input");
  const std::size_t Lout = (L - 1) / stride + 1;
  const auto X = x.data();
  std::vector<double> out(M * Lout);
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t t = 0; t < Lout; ++t) out[m * Lout + t] = X[m * L + t * stride];
  auto nx = x.node();
  return finish({M, Lout}, std::move(out), {nx}, [=] {
    return [nx, M, L, Lout, stride](Node& self) {
      auto& g = nx->grad_buffer();
      for (std::size_t m = 0; m < M; ++m)
        for (std::size_t t = 0; t < Lout; ++t) g[m * L + t * stride] += self.grad[m * Lout + t];
    };
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const std::size_t L = inner_length(x, "layer_norm");
  if (gain.rank() != 1 || gain.dim(0) != L || bias.rank() != 1 || bias.dim(0) != L) {
    throw DimensionError("layer_norm: gain " + shape_str(gain.shape()) + " / bias " +
                         shape_str(bias.shape()) + " must match last axis of " +
                         shape_str(x.shape()));
  }
  const std::size_t rows = x.numel() / L;
  const auto X = x.data();
  const auto Gn = gain.data();
  const auto Bs = bias.data();
  std::vector<double> xhat(x.numel());
  std::vector<double> inv_std(rows);
  std::vector<double> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* v = X.data() + r * L;
    double mean = 0.0;
    for (std::size_t i = 0; i < L; ++i) mean += v[i];
    mean /= static_cast<double>(L);
    double var = 0.0;
    for (std::size_t i = 0; i < L; ++i) var += (v[i] - mean) * (v[i] - mean);
    var /= static_cast<double>(L);
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_std[r] = inv;
    for (std::size_t i = 0; i < L; ++i) {
      const double h = (v[i] - mean) * inv;
      xhat[r * L + i] = h;
      out[r * L + i] = h * Gn[i] + Bs[i];
    }
  }
  auto nx = x.node(), ng = gain.node(), nb = bias.node();
  return finish(x.shape(), std::move(out), {nx, ng, nb}, [&] {
    return [nx, ng, nb, L, rows, xhat = std::move(xhat),
            inv_std = std::move(inv_std)](Node& self) {
      const auto& G = self.grad;
      if (ng->requires_grad || nb->requires_grad) {
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t i = 0; i < L; ++i) {
            if (ng->requires_grad) ng->grad_buffer()[i] += G[r * L + i] * xhat[r * L + i];
            if (nb->requires_grad) nb->grad_buffer()[i] += G[r * L + i];
          }
      }
      if (nx->requires_grad) {
        auto& gx = nx->grad_buffer();
        const double invL = 1.0 / static_cast<double>(L);
        for (std::size_t r = 0; r < rows; ++r) {
          double sum_d = 0.0, sum_dx = 0.0;
          for (std::size_t i = 0; i < L; ++i) {
            const double d = G[r * L + i] * ng->data[i];
            sum_d += d;
            sum_dx += d * xhat[r * L + i];
          }
          for (std::size_t i = 0; i < L; ++i) {
            const double d = G[r * L + i] * ng->data[i];
            gx[r * L + i] +=
                inv_std[r] * (d - invL * sum_d - xhat[r * L + i] * invL * sum_dx);
          }
        }
      }
    };
  });
}

Tensor softmax_lastdim(const Tensor& x) {
  const std::size_t L = inner_length(x, "softmax_lastdim");
  const std::size_t rows = L == 0 ? 0 : x.numel() / L;
  const auto X = x.data();
  std::vector<double> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* v = X.data() + r * L;
    double* y = out.data() + r * L;
    const double mx = *std::max_element(v, v + L);
    double total = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
      y[i] = std::exp(v[i] - mx);
      total += y[i];
    }
    for (std::size_t i = 0; i < L; ++i) y[i] /= total;
  }
  auto nx = x.node();
  auto probs = out;
  return finish(x.shape(), std::move(out), {nx}, [&] {
    return [nx, L, rows, probs = std::move(probs)](Node& self) {
      auto& g = nx->grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        double dot = 0.0;
        for (std::size_t i = 0; i < L; ++i) dot += self.grad[r * L + i] * probs[r * L + i];
        for (std::size_t i = 0; i < L; ++i)
          g[r * L + i] += probs[r * L + i] * (self.grad[r * L + i] - dot);
      }
    };
  });
}

Tensor mean_lastdim(const Tensor& x) {
  const std::size_t L = inner_length(x, "mean_lastdim");
  if (L == 0) throw DimensionError("mean_lastdim: empty last axis");
  const std::size_t rows = x.numel() / L;
  const auto X = x.data();
  std::vector<double> out(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < L; ++i) out[r] += X[r * L + i];
    out[r] /= static_cast<double>(L);
  }
  Shape shape(x.shape().begin(), x.shape().end() - 1);
  auto nx = x.node();
  return finish(std::move(shape), std::move(out), {nx}, [=] {
    return [nx, L, rows](Node& self) {
      auto& g = nx->grad_buffer();
      const double invL = 1.0 / static_cast<double>(L);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t i = 0; i < L; ++i) g[r * L + i] += self.grad[r] * invL;
    };
  });
}

Tensor mean_rows(const Tensor& x) {
  require_rank(x, 2, "mean_rows", "input");
  const std::size_t n = x.dim(0), d = x.dim(1);
  if (n == 0) throw DimensionError("mean_rows: no rows");
  const auto X = x.data();
  std::vector<double> out(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[j] += X[i * d + j];
  for (auto& v : out) v /= static_cast<double>(n);
  auto nx = x.node();
  return finish({d}, std::move(out), {nx}, [=] {
    return [nx, n, d](Node& self) {
      auto& g = nx->grad_buffer();
      const double inv = 1.0 / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) g[i * d + j] += self.grad[j] * inv;
    };
  });
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  auto nx = x.node();
  return finish({}, {total}, {nx}, [=] {
    return [nx](Node& self) {
      auto& g = nx->grad_buffer();
      for (auto& v : g) v += self.grad[0];
    };
  });
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape()) {
    throw DimensionError("mse_loss: prediction " + shape_str(pred.shape()) +
                         " vs target " + shape_str(target.shape()));
  }
  const auto P = pred.data();
  const auto T = target.data();
  const std::size_t n = P.size();
  if (n == 0) throw DimensionError("mse_loss: empty tensors");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += (P[i] - T[i]) * (P[i] - T[i]);
  auto np = pred.node(), nt = target.node();
  return finish({}, {total / static_cast<double>(n)}, {np, nt}, [=] {
    return [np, nt, n](Node& self) {
      const double c = 2.0 * self.grad[0] / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double diff = np->data[i] - nt->data[i];
        if (np->requires_grad) np->grad_buffer()[i] += c * diff;
        if (nt->requires_grad) nt->grad_buffer()[i] -= c * diff;
      }
    };
  });
}

Tensor cross_entropy_logits(const Tensor& logits, std::size_t label) {
  const std::size_t k = logits.numel();
  if (!(logits.rank() == 1 || (logits.rank() == 2 && logits.dim(0) == 1)) || k == 0) {
    throw DimensionError("cross_entropy_logits: expected a single logit row, got " +
                         shape_str(logits.shape()));
  }
  if (label >= k) {
    throw InputError("cross_entropy_logits: label " + std::to_string(label) +
                     " outside [0, " + std::to_string(k) + ")");
  }
  const auto Z = logits.data();
  const double mx = *std::max_element(Z.begin(), Z.end());
  double total = 0.0;
  for (double z : Z) total += std::exp(z - mx);
  const double lse = mx + std::log(total);
  std::vector<double> probs(k);
  for (std::size_t i = 0; i < k; ++i) probs[i] = std::exp(Z[i] - lse);
  auto nz = logits.node();
  return finish({}, {lse - Z[label]}, {nz}, [&] {
    return [nz, label, probs = std::move(probs)](Node& self) {
      auto& g = nz->grad_buffer();
      for (std::size_t i = 0; i < probs.size(); ++i)
        g[i] += self.grad[0] * (probs[i] - (i == label ? 1.0 : 0.0));
    };
  });
}

}  // namespace cwat

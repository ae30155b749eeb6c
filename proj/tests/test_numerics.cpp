#include <doctest.h>

#include <cmath>
#include <numeric>

#include "cwat/error.hpp"
#include "cwat/ops.hpp"
#include "gradcheck.hpp"

using namespace cwat;
using cwat::testing::grad_check;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = uniform(rng, lo, hi);
  return Tensor(std::move(shape), std::move(v));
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// Weighted sum so that every output element gets a distinct upstream grad.
Tensor weighted_sum(const Tensor& y, Rng& rng) {
  Tensor w = random_tensor({y.numel()}, rng);
  return sum(matmul(reshape(y, {1, y.numel()}), reshape(w, {y.numel(), 1})));
}

}  // namespace

TEST_CASE("matmul known products") {
  Tensor eye({2, 2}, {1, 0, 0, 1});
  Tensor b({2, 2}, {5, 6, 7, 8});
  auto c = matmul(eye, b);
  CHECK(std::vector<double>(c.data().begin(), c.data().end()) ==
        std::vector<double>{5, 6, 7, 8});
  auto d = matmul(Tensor({1, 2}, {1, 2}), Tensor({2, 1}, {3, 4}));
  CHECK(d.shape() == Shape{1, 1});
  CHECK(d.item() == 11.0);
}

TEST_CASE("matmul shape mismatch names both shapes") {
  try {
    matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3}));
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
    CHECK(msg.find(" x [2x3]") != std::string::npos);
  }
}

TEST_CASE("matmul gradient matches central differences") {
  Rng rng(11);
  std::vector<Tensor> in{random_tensor({3, 4}, rng), random_tensor({4, 2}, rng)};
  auto r = grad_check(in, [&] { return sum(matmul(in[0], in[1])); });
  CHECK_MESSAGE(r.ok, r.detail);
}

TEST_CASE("conv1d_grouped hand examples") {
  auto y = conv1d_grouped(Tensor({1, 3}, {1, 2, 3}), Tensor({1, 1, 1}, {1}), 1, 1, 0);
  CHECK(std::vector<double>(y.data().begin(), y.data().end()) ==
        std::vector<double>{1, 2, 3});

  auto y2 = conv1d_grouped(Tensor({2, 3}, {1, 1, 1, 2, 2, 2}),
                           Tensor({2, 1, 2}, {1, 1, 1, 1}), 2, 1, 0);
  CHECK(y2.shape() == Shape{2, 2});
  CHECK(std::vector<double>(y2.data().begin(), y2.data().end()) ==
        std::vector<double>{2, 2, 4, 4});
}

TEST_CASE("conv1d_grouped with groups=C equals per-channel loop") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t C = 1 + uniform_index(rng, 6);
    const std::size_t L = 5 + uniform_index(rng, 40);
    const std::size_t K = 1 + uniform_index(rng, 5);
    const std::size_t stride = 1 + uniform_index(rng, 3);
    const std::size_t pad = uniform_index(rng, K);
    auto x = random_tensor({C, L}, rng);
    auto w = random_tensor({C, 1, K}, rng);
    auto y = conv1d_grouped(x, w, C, stride, pad);
    const std::size_t Lout = (L + 2 * pad - K) / stride + 1;
    REQUIRE(y.shape() == Shape{C, Lout});
    for (std::size_t c = 0; c < C; ++c) {
      // Independent single-channel convolution with explicit zero padding.
      std::vector<double> padded(L + 2 * pad, 0.0);
      for (std::size_t t = 0; t < L; ++t) padded[t + pad] = x(c, t);
      for (std::size_t t = 0; t < Lout; ++t) {
        double acc = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          const std::size_t p = t * stride + k;
          if (p < pad || p >= pad + L) continue;
          acc += w(c, 0, k) * padded[p];
        }
        CHECK(std::abs(acc - y(c, t)) <= 1e-12);
      }
    }
  }
}

TEST_CASE("conv1d_grouped configuration errors") {
  CHECK_THROWS_AS(conv1d_grouped(Tensor::zeros({3, 8}), Tensor::zeros({4, 1, 3}), 2, 1, 0),
                  ConfigError);
  CHECK_THROWS_AS(conv1d_grouped(Tensor::zeros({2, 2}), Tensor::zeros({2, 1, 5}), 2, 1, 0),
                  DimensionError);
}

TEST_CASE("conv1d_grouped gradients") {
  Rng rng(5);
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t groups = 1 + uniform_index(rng, 3);
    const std::size_t in_per = 1 + uniform_index(rng, 2), out_per = 1 + uniform_index(rng, 2);
    const std::size_t K = 1 + uniform_index(rng, 4);
    const std::size_t L = K + uniform_index(rng, 12);
    const std::size_t stride = 1 + uniform_index(rng, 3), pad = uniform_index(rng, K);
    std::vector<Tensor> in{random_tensor({groups * in_per, L}, rng),
                           random_tensor({groups * out_per, in_per, K}, rng)};
    Rng wrng(trial);
    auto probe = random_tensor({groups * out_per * ((L + 2 * pad - K) / stride + 1)}, wrng);
    auto r = grad_check(in, [&] {
      auto y = conv1d_grouped(in[0], in[1], groups, stride, pad);
      return sum(matmul(reshape(y, {1, y.numel()}), reshape(probe, {y.numel(), 1})));
    });
    CHECK_MESSAGE(r.ok, r.detail);
  }
}

TEST_CASE("conv_transpose1d_grouped is the adjoint of conv1d_grouped") {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t groups = 1 + uniform_index(rng, 3);
    const std::size_t in_per = 1 + uniform_index(rng, 2), out_per = 1 + uniform_index(rng, 2);
    const std::size_t K = 1 + uniform_index(rng, 5);
    const std::size_t L = K + uniform_index(rng, 20);
    const std::size_t stride = 1 + uniform_index(rng, 4), pad = uniform_index(rng, K);
    auto x = random_tensor({groups * in_per, L}, rng);
    auto w = random_tensor({groups * out_per, in_per, K}, rng);
    auto y = conv1d_grouped(x, w, groups, stride, pad);
    const std::size_t Lout = y.dim(1);
    const std::size_t op = L - ((Lout - 1) * stride + K - 2 * pad);
    auto g = random_tensor({groups * out_per, Lout}, rng);
    auto xt = conv_transpose1d_grouped(g, w, groups, stride, pad, op);
    REQUIRE(xt.shape() == x.shape());
    CHECK(dot(y.data(), g.data()) == doctest::Approx(dot(x.data(), xt.data())).epsilon(1e-12));
  }
}

TEST_CASE("conv_transpose1d_grouped gradients") {
  Rng rng(21);
  std::vector<Tensor> in{random_tensor({4, 6}, rng), random_tensor({4, 2, 5}, rng)};
  Rng wrng(1);
  auto r = grad_check(in, [&] {
    auto y = conv_transpose1d_grouped(in[0], in[1], 2, 3, 2, 1);
    Rng local(4);
    return weighted_sum(y, local);
  });
  CHECK_MESSAGE(r.ok, r.detail);
}

TEST_CASE("layer_norm closed forms") {
  auto one = Tensor::full({4}, 1.0), zero = Tensor::zeros({4});
  auto y = layer_norm(Tensor::vector({5, 5, 5, 5}), one, zero);
  for (double v : y.data()) CHECK(v == 0.0);

  auto y2 = layer_norm(Tensor::vector({1, -1}), Tensor::full({2}, 1.0), Tensor::zeros({2}));
  const double expect = 1.0 / std::sqrt(1.0 + kLayerNormEps);
  CHECK(y2(0) == doctest::Approx(expect).epsilon(1e-15));
  CHECK(y2(1) == doctest::Approx(-expect).epsilon(1e-15));
}

TEST_CASE("layer_norm statistics stay within a row") {
  Rng rng(2);
  auto x = random_tensor({5, 16}, rng, -300, 300);
  auto gain = Tensor::full({16}, 1.0), bias = Tensor::zeros({16});
  auto y = layer_norm(x, gain, bias);
  for (std::size_t r = 0; r < 5; ++r) {
    double mean = 0, var = 0;
    for (std::size_t i = 0; i < 16; ++i) mean += y(r, i);
    mean /= 16;
    for (std::size_t i = 0; i < 16; ++i) var += (y(r, i) - mean) * (y(r, i) - mean);
    var /= 16;
    CHECK(std::abs(mean) < 1e-10);
    CHECK(std::abs(var - 1.0) < 1e-6);
  }
  // Perturb row 2 only.
  auto x2 = x.detach();
  x2.mutable_data()[2 * 16 + 3] += 10.0;
  auto y2 = layer_norm(x2, gain, bias);
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t i = 0; i < 16; ++i) {
      if (r == 2) continue;
      CHECK(y(r, i) == y2(r, i));
    }
}

TEST_CASE("layer_norm gradients") {
  Rng rng(8);
  std::vector<Tensor> in{random_tensor({3, 7}, rng), random_tensor({7}, rng),
                         random_tensor({7}, rng)};
  auto r = grad_check(in, [&] {
    Rng local(2);
    return weighted_sum(layer_norm(in[0], in[1], in[2]), local);
  });
  CHECK_MESSAGE(r.ok, r.detail);
}

TEST_CASE("softmax") {
  auto y = softmax_lastdim(Tensor::vector({0, 0}));
  CHECK(y(0) == 0.5);
  CHECK(y(1) == 0.5);
  auto big = softmax_lastdim(Tensor::vector({1000, 0}));
  CHECK(std::isfinite(big(0)));
  CHECK(big(0) == doctest::Approx(1.0));
  CHECK(big(1) == doctest::Approx(0.0));

  Rng rng(4);
  auto rows = softmax_lastdim(random_tensor({6, 9}, rng, -20, 20));
  for (std::size_t r = 0; r < 6; ++r) {
    double s = 0;
    for (std::size_t i = 0; i < 9; ++i) s += rows(r, i);
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }

  std::vector<Tensor> in{random_tensor({4}, rng)};
  auto r = grad_check(in, [&] {
    Rng local(3);
    return weighted_sum(softmax_lastdim(in[0]), local);
  });
  CHECK_MESSAGE(r.ok, r.detail);
}

TEST_CASE("elementwise ops and losses") {
  auto r = relu(Tensor::vector({-1, 2}));
  CHECK(r(0) == 0.0);
  CHECK(r(1) == 2.0);

  Rng rng(1);
  auto x = random_tensor({3, 5}, rng);
  auto same = dropout(x, 0.0, true, rng);
  CHECK(std::equal(same.data().begin(), same.data().end(), x.data().begin()));
  auto eval = dropout(x, 0.5, false, rng);
  CHECK(std::equal(eval.data().begin(), eval.data().end(), x.data().begin()));
  CHECK_THROWS_AS(dropout(x, 1.0, true, rng), ConfigError);

  CHECK(cross_entropy_logits(Tensor::vector({0, 0}), 0).item() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK_THROWS_AS(cross_entropy_logits(Tensor::vector({0, 0}), 2), InputError);

  CHECK(mse_loss(Tensor::vector({1, 3}), Tensor::vector({0, 1})).item() == 2.5);
  CHECK(mean_lastdim(Tensor({2, 2}, {1, 3, 5, 9})).data()[1] == 7.0);
}

TEST_CASE("dropout keeps the expectation") {
  Rng rng(77);
  auto x = Tensor::full({20000}, 1.0);
  auto y = dropout(x, 0.3, true, rng);
  const double mean =
      std::accumulate(y.data().begin(), y.data().end(), 0.0) / static_cast<double>(y.numel());
  CHECK(mean == doctest::Approx(1.0).epsilon(0.02));
  for (double v : y.data()) CHECK((v == 0.0 || std::abs(v - 1.0 / 0.7) < 1e-15));
}

TEST_CASE("dropout and relu gradients follow the mask") {
  Rng rng(6);
  std::vector<Tensor> in{random_tensor({4, 6}, rng)};
  auto r = grad_check(in, [&] {
    Rng mask_rng(42);  // same mask on every evaluation
    Rng local(5);
    return weighted_sum(dropout(relu(in[0]), 0.4, true, mask_rng), local);
  });
  CHECK_MESSAGE(r.ok, r.detail);
}

TEST_CASE("loss gradients") {
  Rng rng(10);
  std::vector<Tensor> in{random_tensor({5}, rng), random_tensor({5}, rng)};
  auto r = grad_check(in, [&] { return mse_loss(in[0], in[1]); });
  CHECK_MESSAGE(r.ok, r.detail);
  std::vector<Tensor> logits{random_tensor({3}, rng)};
  auto r2 = grad_check(logits, [&] { return cross_entropy_logits(logits[0], 1); });
  CHECK_MESSAGE(r2.ok, r2.detail);
  std::vector<Tensor> rows{random_tensor({4, 3}, rng)};
  auto r3 = grad_check(rows, [&] {
    Rng local(1);
    return weighted_sum(transpose(add_bias(rows[0], mean_rows(rows[0]))), local);
  });
  CHECK_MESSAGE(r3.ok, r3.detail);
}

TEST_CASE("backward contract") {
  Tensor x({2, 3}, {1, 2, 3, 4, 5, 6}, true);
  {
    Tape tape;
    auto loss = sum(x);
    backward(loss);
    for (double g : x.grad()) CHECK(g == 1.0);
    CHECK_THROWS_AS(tape.backward(loss), UsageError);
    tape.reset();
    CHECK(tape.size() == 0);
  }
  {
    Tape tape;
    auto y = scale(x, 2.0);
    CHECK_THROWS_AS(tape.backward(y), UsageError);
  }
  CHECK_THROWS_AS(backward(Tensor::scalar(1.0)), UsageError);
}

TEST_CASE("tape is topologically ordered and visits nodes once") {
  Tensor x({3}, {1, 2, 3}, true);
  Tape tape;
  auto a = scale(x, 2.0);
  auto b = add(a, a);  // shared input
  auto loss = sum(b);
  CHECK(tape.size() == 3);
  tape.backward(loss);
  for (double g : x.grad()) CHECK(g == 4.0);
}

TEST_CASE("no-grad guard suppresses recording") {
  Tensor x({2}, {1, 2}, true);
  Tape tape;
  {
    NoGradGuard guard;
    auto y = scale(x, 3.0);
    CHECK_FALSE(y.requires_grad());
  }
  CHECK(tape.size() == 0);
}

TEST_CASE("composition layer_norm(relu(Wx)) gradient") {
  Rng rng(12);
  std::vector<Tensor> in{random_tensor({6, 5}, rng), random_tensor({5, 8}, rng),
                         random_tensor({8}, rng), random_tensor({8}, rng)};
  auto r = grad_check(in, [&] {
    Rng local(9);
    return weighted_sum(layer_norm(relu(matmul(in[0], in[1])), in[2], in[3]), local);
  });
  CHECK_MESSAGE(r.ok, r.detail);
}

TEST_CASE("randomized gradient property over small shapes") {
  Rng rng(2024);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t a = 1 + uniform_index(rng, 8), b = 1 + uniform_index(rng, 8),
                      c = 2 + uniform_index(rng, 15);
    std::vector<Tensor> in{random_tensor({a, c}, rng), random_tensor({c, b}, rng),
                           random_tensor({a, c}, rng)};
    auto r = grad_check(in, [&] {
      Rng local(trial);
      auto h = softmax_lastdim(add(in[0], in[2]));
      auto k = matmul(h, in[1]);
      return weighted_sum(mean_lastdim(relu(k)), local);
    });
    CHECK_MESSAGE(r.ok, r.detail);
  }
}

TEST_CASE("subsample keeps every stride-th sample") {
  auto y = subsample(Tensor({1, 7}, {0, 1, 2, 3, 4, 5, 6}), 3);
  CHECK(y.shape() == Shape{1, 3});
  CHECK(y(0, 2) == 6.0);
  Rng rng(3);
  std::vector<Tensor> in{random_tensor({2, 9}, rng)};
  auto r = grad_check(in, [&] {
    Rng local(2);
    return weighted_sum(subsample(in[0], 4), local);
  });
  CHECK_MESSAGE(r.ok, r.detail);
}

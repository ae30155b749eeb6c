#pragma once

// Central-difference gradient oracle used by the unit and acceptance tests.
// It only touches tensor values through mutable_data() and re-evaluates the
// forward function without a tape, so it shares nothing with the backward
// rules it checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "cwat/tensor.hpp"

namespace cwat::testing {

struct GradCheckResult {
  bool ok = true;
  double worst_abs = 0.0;
  double worst_rel = 0.0;
  std::string detail;
};

// f must build a fresh scalar from `inputs` each call.
inline GradCheckResult grad_check(std::vector<Tensor>& inputs,
                                  const std::function<Tensor()>& f, double rel_tol = 1e-5,
                                  double abs_tol = 1e-7, double h = 1e-6) {
  for (auto& t : inputs) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  {
    Tape tape;
    Tensor loss = f();
    tape.backward(loss);
  }
  GradCheckResult result;
  NoGradGuard no_grad;
  for (std::size_t ti = 0; ti < inputs.size(); ++ti) {
    auto& t = inputs[ti];
    std::vector<double> analytic(t.numel(), 0.0);
    if (t.has_grad()) analytic.assign(t.grad().begin(), t.grad().end());
    auto values = t.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = f().item();
      values[i] = saved - h;
      const double down = f().item();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double err = std::abs(numeric - analytic[i]);
      const double scale_ = std::max(std::abs(numeric), std::abs(analytic[i]));
      const double rel = scale_ > 0.0 ? err / scale_ : 0.0;
      result.worst_abs = std::max(result.worst_abs, err);
      if (err > abs_tol) result.worst_rel = std::max(result.worst_rel, rel);
      if (err > std::max(rel_tol * scale_, abs_tol) && result.ok) {
        result.ok = false;
        result.detail = "input " + std::to_string(ti) + "[" + std::to_string(i) +
                        "]: tape " + std::to_string(analytic[i]) + " vs fd " +
                        std::to_string(numeric);
      }
    }
  }
  return result;
}

}  // namespace cwat::testing

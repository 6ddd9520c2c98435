// SPDX-License-Identifier: Apache-2.0
#include "xdv/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "xdv/error.hpp"

namespace xdv {

GradCheckReport grad_check(const ScalarObjective& f, std::span<const NamedTensor> params, double h, double tol) {
  GradCheckReport report;
  report.h = h;
  report.tol = tol;

  std::vector<bool> had_grad;
  for (const NamedTensor& p : params) {
    had_grad.push_back(p.tensor->requires_grad());
    if (!p.tensor->requires_grad()) p.tensor->set_requires_grad(true);
    p.tensor->zero_grad();
  }
  const double first = f(false);
  const double second = f(false);
  if (std::memcmp(&first, &second, sizeof(double)) != 0) {
    throw ContractError("objective is not deterministic: " + std::to_string(first) + " vs " + std::to_string(second));
  }
  f(true);

  for (const NamedTensor& p : params) {
    GradCheckEntry entry{p.name};
    const std::vector<double> analytic(p.tensor->grad().begin(), p.tensor->grad().end());
    auto w = p.tensor->data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double saved = w[i];
      const double hi = saved + h, lo = saved - h;
      w[i] = hi;
      const double up = f(false);
      w[i] = lo;
      const double down = f(false);
      w[i] = saved;
      const double numeric = (up - down) / (hi - lo);
      const double abs_err = std::abs(analytic[i] - numeric);
      const double rel = abs_err / std::max({std::abs(analytic[i]), std::abs(numeric), kGradCheckFloor});
      if (rel > entry.max_rel_error) {
        entry.max_rel_error = rel;
        entry.worst_index = i;
      }
      entry.max_abs_error = std::max(entry.max_abs_error, abs_err);
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.entries.push_back(std::move(entry));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!had_grad[i]) params[i].tensor->set_requires_grad(false);
  }
  report.passed = report.max_rel_error < tol;
  return report;
}

ScalarObjective taped_objective(std::function<Var(Tape&)> build) {
  return [build = std::move(build)](bool with_grad) {
    Tape tape(with_grad ? Tape::Mode::training : Tape::Mode::inference);
    Var loss = build(tape);
    const double value = loss.value()[0];
    if (with_grad) backward(loss);
    return value;
  };
}

}  // namespace xdv

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "xdv/tape.hpp"

namespace xdv {

/// Evaluates a scalar objective. With `with_grad` set it must also add the
/// analytic gradient into the grad buffer of every checked tensor.
using ScalarObjective = std::function<double(bool with_grad)>;

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t worst_index = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  double h = 0.0;
  double tol = 0.0;
  bool passed = false;
};

/// Relative error |a - n| / max(|a|, |n|, floor). Central differences of an
/// O(10) objective at h = 1e-5 carry ~1e-10 of round-off, so entries whose
/// true derivative is below the floor are judged against the floor instead.
constexpr double kGradCheckFloor = 1e-5;

/// Compares analytic gradients with central differences (f(w+h) - f(w-h)) / 2h
/// for every element of every tensor. Throws ContractError when two evaluations
/// at the same point disagree bitwise.
GradCheckReport grad_check(const ScalarObjective& f, std::span<const NamedTensor> params, double h = 1e-5,
                           double tol = 1e-4);

/// Adapts a tape-building function into a ScalarObjective.
ScalarObjective taped_objective(std::function<Var(Tape&)> build);

}  // namespace xdv

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "xdv/tensor.hpp"

namespace xdv {

struct AdamConfig {
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment buffers of one Adam run; m[i] and v[i] track parameter i.
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

/// One bias-corrected Adam update of `params` with `grads`.
/// Moment buffers are created on the first call; state.step grows by one.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state);

/// Adam over a fixed parameter set, reading each tensor's own gradient buffer.
class Adam {
 public:
  /// Throws ContractError if any tensor is frozen (no requires_grad).
  Adam(std::vector<Tensor*> params, AdamConfig config = {});

  void step();
  void set_alpha(double alpha) { state_.config.alpha = alpha; }
  void zero_grad();
  /// Rescales all gradients so their joint L2 norm is at most `max_norm`;
  /// returns the norm before rescaling.
  double clip_grad_norm(double max_norm);

  const std::vector<Tensor*>& params() const { return params_; }
  AdamState& state() { return state_; }
  const AdamState& state() const { return state_; }

 private:
  std::vector<Tensor*> params_;
  AdamState state_;
};

}  // namespace xdv

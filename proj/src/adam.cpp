// SPDX-License-Identifier: Apache-2.0
#include "xdv/adam.hpp"

#include <cmath>
#include <string>

#include "xdv/error.hpp"

namespace xdv {
namespace {

void update(std::span<Tensor* const> params, std::span<const std::span<const double>> grads, AdamState& s) {
  if (s.m.empty()) {
    for (const Tensor* p : params) {
      s.m.emplace_back(p->size(), 0.0);
      s.v.emplace_back(p->size(), 0.0);
    }
  }
  if (s.m.size() != params.size()) {
    throw DimensionError("adam state tracks " + std::to_string(s.m.size()) + " tensors, given " +
                         std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (s.m[i].size() != params[i]->size() || grads[i].size() != params[i]->size()) {
      throw DimensionError("adam: parameter " + std::to_string(i) + " of shape " +
                           params[i]->shape().to_string() + " does not match its gradient or moments");
    }
  }
  ++s.step;
  const AdamConfig& c = s.config;
  const double t = static_cast<double>(s.step);
  const double correct1 = 1.0 - std::pow(c.beta1, t);
  const double correct2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i]->data();
    auto g = grads[i];
    auto& m = s.m[i];
    auto& v = s.v[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      const double mhat = m[j] / correct1;
      const double vhat = v[j] / correct2;
      w[j] -= c.alpha * mhat / (std::sqrt(vhat) + c.epsilon);
    }
  }
}

}  // namespace

void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state) {
  if (params.size() != grads.size()) {
    throw DimensionError("adam: " + std::to_string(params.size()) + " parameters but " +
                         std::to_string(grads.size()) + " gradients");
  }
  std::vector<std::span<const double>> views;
  views.reserve(grads.size());
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!(grads[i].shape() == params[i]->shape())) {
      throw DimensionError("adam: gradient " + grads[i].shape().to_string() + " for parameter " +
                           params[i]->shape().to_string());
    }
    views.push_back(grads[i].data());
  }
  update(params, views, state);
}

Adam::Adam(std::vector<Tensor*> params, AdamConfig config) : params_(std::move(params)) {
  state_.config = config;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i]->requires_grad()) {
      throw ContractError("optimizer given frozen tensor #" + std::to_string(i) + " " +
                          params_[i]->shape().to_string());
    }
  }
}

void Adam::step() {
  std::vector<std::span<const double>> views;
  views.reserve(params_.size());
  for (const Tensor* p : params_) views.push_back(p->grad());
  update(params_, views, state_);
}

double Adam::clip_grad_norm(double max_norm) {
  double sq = 0.0;
  for (const Tensor* p : params_)
    for (double g : p->grad()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double factor = max_norm / norm;
    for (const Tensor* p : params_)
      for (double& g : p->grad()) g *= factor;
  }
  return norm;
}

void Adam::zero_grad() {
  for (const Tensor* p : params_) p->zero_grad();
}

}  // namespace xdv

// SPDX-License-Identifier: Apache-2.0
#include "xdv/tape.hpp"

#include <algorithm>

#include "xdv/error.hpp"

namespace xdv {

const Tensor& Var::value() const { return tape_->value(id_); }
bool Var::needs_grad() const { return tape_->needs_grad(id_); }

const Tensor& Tape::value(std::uint32_t id) const {
  const Node& n = nodes_[id];
  return n.external ? *n.external : n.value;
}

Var Tape::leaf(const Tensor& tensor) {
  if (auto it = leaf_ids_.find(&tensor); it != leaf_ids_.end()) return {this, it->second};
  Node n;
  n.external = &tensor;
  n.needs_grad = mode_ == Mode::training && tensor.requires_grad();
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back(std::move(n));
  leaf_ids_.emplace(&tensor, id);
  return {this, id};
}

Var Tape::constant(Tensor value) { return record(std::move(value), false, nullptr); }

Var Tape::variable(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = mode_ == Mode::training;
  nodes_.push_back(std::move(n));
  return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::record(Tensor value, bool needs_grad, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad && mode_ == Mode::training;
  if (n.needs_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

std::span<double> Tape::grad_buffer(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(value(id).size(), 0.0);
  return n.grad;
}

void Tape::backward(Var loss) {
  if (&loss.tape() != this) throw ContractError("loss recorded on another tape");
  if (loss.value().size() != 1) {
    throw ContractError("backward needs a scalar loss, got shape " + loss.value().shape().to_string());
  }
  GradSeed seed{loss, {1.0}};
  backward(std::span<const GradSeed>(&seed, 1));
}

void Tape::backward(std::span<const GradSeed> seeds) {
  for (Node& n : nodes_) n.grad.clear();
  std::uint32_t top = 0;
  bool any = false;
  for (const GradSeed& s : seeds) {
    if (&s.node.tape() != this) throw ContractError("gradient seed recorded on another tape");
    if (s.grad.size() != s.node.value().size()) {
      throw DimensionError("gradient seed of " + std::to_string(s.grad.size()) + " values for node of shape " +
                           s.node.value().shape().to_string());
    }
    if (!needs_grad(s.node.id())) continue;
    auto g = grad_buffer(s.node.id());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += s.grad[i];
    top = std::max(top, s.node.id());
    any = true;
  }
  if (any) sweep(top);
}

void Tape::sweep(std::uint32_t top) {
  // Node ids are a topological order: every input precedes its consumers.
  for (std::int64_t id = top; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.empty() || !n.backward) continue;
    n.backward(*this, static_cast<std::uint32_t>(id));
  }
}

std::span<const double> Tape::grad(Var v) const { return nodes_[v.id()].grad; }

std::span<const double> Tape::grad(const Tensor& leaf) const {
  auto it = leaf_ids_.find(&leaf);
  if (it == leaf_ids_.end()) return {};
  return nodes_[it->second].grad;
}

void Tape::for_each_leaf_grad(const std::function<void(const Tensor&, std::span<const double>)>& fn) const {
  for (const Node& n : nodes_) {
    if (n.external && !n.grad.empty()) fn(*n.external, n.grad);
  }
}

void Tape::accumulate_into_leaves() const {
  for_each_leaf_grad([](const Tensor& t, std::span<const double> g) {
    if (!t.requires_grad()) return;
    auto dst = t.grad();
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
  });
}

void backward(Var loss) {
  loss.tape().backward(loss);
  loss.tape().accumulate_into_leaves();
}

}  // namespace xdv

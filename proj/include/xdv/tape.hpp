// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "xdv/tensor.hpp"

namespace xdv {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  bool needs_grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

  Tape& tape() const { return *tape_; }
  std::uint32_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

/// Seed for a reverse sweep: d(objective)/d(node) supplied from outside.
struct GradSeed {
  Var node;
  std::vector<double> grad;
};

/// Reverse-mode recording of one forward computation.
///
/// A tape is rebuilt for each forward pass. Parameters enter through leaf(),
/// which references the tensor without copying it; in inference mode no
/// leaf needs a gradient and operations record no backward closures.
class Tape {
 public:
  enum class Mode { training, inference };
  using BackwardFn = std::function<void(Tape&, std::uint32_t self)>;

  explicit Tape(Mode mode = Mode::training) : mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Mode mode() const { return mode_; }

  /// References an external tensor. Repeated calls with the same tensor return the same node.
  Var leaf(const Tensor& tensor);
  /// Owned value that never receives a gradient.
  Var constant(Tensor value);
  /// Owned value that receives a gradient in training mode.
  Var variable(Tensor value);

  /// Records an operation result. `fn` is dropped when no input needs a gradient.
  Var record(Tensor value, bool needs_grad, BackwardFn fn);

  void backward(Var loss);
  void backward(std::span<const GradSeed> seeds);

  /// Gradient accumulated on a node by the last sweep; empty when none reached it.
  std::span<const double> grad(Var v) const;
  std::span<const double> grad(const Tensor& leaf) const;

  /// Adds leaf gradients into the owning tensors' grad buffers.
  void accumulate_into_leaves() const;
  /// Visits (tensor, gradient) for every leaf that received a gradient.
  void for_each_leaf_grad(const std::function<void(const Tensor&, std::span<const double>)>& fn) const;

  std::size_t size() const { return nodes_.size(); }

  // Operation-author interface.
  const Tensor& value(std::uint32_t id) const;
  bool needs_grad(std::uint32_t id) const { return nodes_[id].needs_grad; }
  std::span<const double> node_grad(std::uint32_t id) const { return nodes_[id].grad; }
  /// Zero-initialised gradient buffer of a node, allocated on first use.
  std::span<double> grad_buffer(std::uint32_t id);

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    std::vector<double> grad;
    BackwardFn backward;
    bool needs_grad = false;
  };

  void sweep(std::uint32_t top);

  Mode mode_;
  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, std::uint32_t> leaf_ids_;
};

/// Reverse sweep from a scalar loss, accumulating into every requires_grad leaf tensor.
void backward(Var loss);

}  // namespace xdv

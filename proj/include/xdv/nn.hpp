// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xdv/tape.hpp"

// Recurrent and attention building blocks shared by the translation models
// and the shared layers.
namespace xdv {

/// GRU cell with packed gate blocks (update, reset, candidate):
/// W_x [in x 3d], W_h [d x 3d], b [3d].
struct GruParams {
  Tensor W_x;
  Tensor W_h;
  Tensor b;

  static GruParams zeros(std::size_t input_dim, std::size_t hidden);
  std::size_t input_dim() const { return W_x.rows(); }
  std::size_t hidden() const { return W_h.rows(); }
  void collect(const std::string& prefix, std::vector<NamedTensor>& out);
};

/// Gate pre-activations x W_x + b for every row of `x` at once.
Var gru_inputs(Tape& tape, const GruParams& gru, Var x);
/// One transition from `h` given the pre-activation row `gx`.
Var gru_step(Tape& tape, const GruParams& gru, Var gx, Var h);
/// Scan over the rows of `x` from a zero state. Row i of the result is the
/// state after consuming row i; with `reverse` the scan runs last row first.
Var gru_scan(Tape& tape, const GruParams& gru, Var x, bool reverse = false);

/// Additive attention: e_i = v_a . tanh(s U_a + k_i W_a).
struct AttentionParams {
  Tensor U_a;  // [query x att]
  Tensor W_a;  // [key x att]
  Tensor v_a;  // [att x 1]

  static AttentionParams zeros(std::size_t query_dim, std::size_t key_dim, std::size_t att_dim);
  void collect(const std::string& prefix, std::vector<NamedTensor>& out);
};

/// Keys attended by a decoder, with their query-independent projection cached.
struct AttentionMemory {
  Var keys;       // [n x key]
  Var projected;  // keys W_a, [n x att]
};

struct AttentionRead {
  Var context;  // [1 x key]
  Var weights;  // [n x 1], sums to one
};

AttentionMemory attention_memory(Tape& tape, const AttentionParams& att, Var keys);
AttentionRead attend(Tape& tape, const AttentionParams& att, const AttentionMemory& memory, Var query);

/// Fills every tensor uniformly in [-scale, scale]; each tensor draws from a
/// stream derived from `seed` and its name, so adding parameters never shifts
/// the others.
void init_uniform(std::span<const NamedTensor> params, std::uint64_t seed, double scale);

/// Toggles requires_grad on every tensor.
void set_trainable(std::span<const NamedTensor> params, bool on);

}  // namespace xdv

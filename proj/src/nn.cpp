// SPDX-License-Identifier: Apache-2.0
#include "xdv/nn.hpp"

#include "xdv/ops.hpp"
#include "xdv/random.hpp"

namespace xdv {

GruParams GruParams::zeros(std::size_t input_dim, std::size_t hidden) {
  return {Tensor(Shape{input_dim, 3 * hidden}), Tensor(Shape{hidden, 3 * hidden}), Tensor(Shape{3 * hidden})};
}

void GruParams::collect(const std::string& prefix, std::vector<NamedTensor>& out) {
  out.push_back({prefix + ".W_x", &W_x});
  out.push_back({prefix + ".W_h", &W_h});
  out.push_back({prefix + ".b", &b});
}

Var gru_inputs(Tape& tape, const GruParams& gru, Var x) {
  return add(matmul(x, tape.leaf(gru.W_x)), tape.leaf(gru.b));
}

Var gru_step(Tape& tape, const GruParams& gru, Var gx, Var h) {
  return gru_gates(gx, matmul(h, tape.leaf(gru.W_h)), h);
}

Var gru_scan(Tape& tape, const GruParams& gru, Var x, bool reverse) {
  const std::size_t n = x.rows();
  const Var gx = gru_inputs(tape, gru, x);
  Var h = tape.constant(Tensor(Shape{1, gru.hidden()}));
  std::vector<Var> states(n);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t i = reverse ? n - 1 - t : t;
    h = gru_step(tape, gru, row(gx, i), h);
    states[i] = h;
  }
  return n == 1 ? states[0] : concat_rows(states);
}

AttentionParams AttentionParams::zeros(std::size_t query_dim, std::size_t key_dim, std::size_t att_dim) {
  return {Tensor(Shape{query_dim, att_dim}), Tensor(Shape{key_dim, att_dim}), Tensor(Shape{att_dim, 1})};
}

void AttentionParams::collect(const std::string& prefix, std::vector<NamedTensor>& out) {
  out.push_back({prefix + ".U_a", &U_a});
  out.push_back({prefix + ".W_a", &W_a});
  out.push_back({prefix + ".v_a", &v_a});
}

AttentionMemory attention_memory(Tape& tape, const AttentionParams& att, Var keys) {
  return {keys, matmul(keys, tape.leaf(att.W_a))};
}

AttentionRead attend(Tape& tape, const AttentionParams& att, const AttentionMemory& memory, Var query) {
  const Var hidden = tanh(add(memory.projected, matmul(query, tape.leaf(att.U_a))));
  const Var weights = softmax(matmul(hidden, tape.leaf(att.v_a)), 0);
  return {matmul(transpose(weights), memory.keys), weights};
}

void init_uniform(std::span<const NamedTensor> params, std::uint64_t seed, double scale) {
  for (const NamedTensor& p : params) {
    Rng rng(derive_seed(seed, p.name));
    for (double& v : p.tensor->data()) v = rng.uniform(-scale, scale);
  }
}

void set_trainable(std::span<const NamedTensor> params, bool on) {
  for (const NamedTensor& p : params) p.tensor->set_requires_grad(on);
}

}  // namespace xdv

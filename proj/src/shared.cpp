// SPDX-License-Identifier: Apache-2.0
#include "xdv/shared.hpp"

#include <cmath>

#include "xdv/error.hpp"
#include "xdv/ops.hpp"

namespace xdv {
namespace {

constexpr double kInitScale = 0.08;

HeadParams zero_head(std::size_t d) {
  return {Tensor(Shape{d, d}), Tensor(Shape{d, d}), Tensor(Shape{d, d}),
          Tensor(Shape{d}),    Tensor(Shape{d}),    Tensor(Shape{d})};
}

LanguageProjection zero_projection(std::size_t key, std::size_t d) { return {Tensor(Shape{key, d}), Tensor(Shape{d})}; }

void require_variant(const SharedStack& stack, Variant v, const char* op) {
  if (stack.config.variant != v) {
    throw ContractError(std::string(op) + " needs the " + variant_name(v) + " variant, stack is " +
                        variant_name(stack.config.variant));
  }
}

}  // namespace

const char* variant_name(Variant v) { return v == Variant::gru_sattn ? "gru_sattn" : "stacked_sattn"; }

Variant parse_variant(const std::string& name) {
  if (name == "gru_sattn") return Variant::gru_sattn;
  if (name == "stacked_sattn") return Variant::stacked_sattn;
  throw InputError("unknown variant '" + name + "' (expected gru_sattn or stacked_sattn)");
}

SharedStack::SharedStack(const SharedConfig& c)
    : config(c),
      proj_a(zero_projection(c.key_dim, c.d_h)),
      proj_b(zero_projection(c.key_dim, c.d_h)),
      bridge{GruParams::zeros(c.d_h, c.d_h), Tensor(Shape{c.d_h, c.key_dim}), Tensor(Shape{c.key_dim})} {
  if (c.d_h == 0 || c.r == 0 || c.key_dim == 0) throw InputError("shared layer dimensions must be positive");
  if (c.variant == Variant::gru_sattn) gru1 = GruParams::zeros(c.d_h, c.d_h);
  const std::size_t n_layers = c.variant == Variant::gru_sattn ? 1 : 2;
  layers.assign(n_layers, std::vector<HeadParams>(c.r, zero_head(c.d_h)));
}

SharedStack SharedStack::initialized(const SharedConfig& config, std::uint64_t seed) {
  SharedStack s(config);
  init_uniform(s.parameters(), seed, kInitScale);
  return s;
}

std::vector<NamedTensor> SharedStack::parameters() {
  std::vector<NamedTensor> out;
  for (Lang l : {Lang::a, Lang::b}) {
    LanguageProjection& p = l == Lang::a ? proj_a : proj_b;
    const std::string prefix = std::string("proj_") + lang_name(l);
    out.push_back({prefix + ".W_e", &p.W_e});
    out.push_back({prefix + ".b_e", &p.b_e});
  }
  if (config.variant == Variant::gru_sattn) gru1.collect("gru1", out);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (std::size_t m = 0; m < layers[l].size(); ++m) {
      HeadParams& h = layers[l][m];
      const std::string prefix = "layer" + std::to_string(l + 1) + ".head" + std::to_string(m + 1);
      out.push_back({prefix + ".W_q", &h.W_q});
      out.push_back({prefix + ".W_k", &h.W_k});
      out.push_back({prefix + ".W_v", &h.W_v});
      out.push_back({prefix + ".b_q", &h.b_q});
      out.push_back({prefix + ".b_k", &h.b_k});
      out.push_back({prefix + ".b_v", &h.b_v});
    }
  }
  bridge.gru.collect("gru2", out);
  out.push_back({"W_p", &bridge.W_p});
  out.push_back({"b_p", &bridge.b_p});
  return out;
}

void SharedStack::set_trainable(bool on) { xdv::set_trainable(parameters(), on); }

Var project_in(Tape& tape, const LanguageProjection& proj, Var annotations) {
  return add(matmul(annotations, tape.leaf(proj.W_e)), tape.leaf(proj.b_e));
}

Var shared_gru1(Tape& tape, const SharedStack& stack, Var projected) {
  require_variant(stack, Variant::gru_sattn, "shared_gru1");
  return gru_scan(tape, stack.gru1, projected);
}

HeadRead self_attend_head(Tape& tape, const HeadParams& head, Var z, std::size_t d_h) {
  const Var q = add(matmul(z, tape.leaf(head.W_q)), tape.leaf(head.b_q));
  const Var k = add(matmul(z, tape.leaf(head.W_k)), tape.leaf(head.b_k));
  const Var v = add(matmul(z, tape.leaf(head.W_v)), tape.leaf(head.b_v));
  const Var scores = scale(sum_cols(mul(q, k)), 1.0 / std::sqrt(static_cast<double>(d_h)));
  const Var g = softmax(scores, 0);
  return {matmul(transpose(g), v), g};
}

Var attend_layer(Tape& tape, const std::vector<HeadParams>& heads, Var z, std::size_t d_h,
                 std::vector<Var>* weights) {
  std::vector<Var> rows;
  rows.reserve(heads.size());
  for (const HeadParams& h : heads) {
    const HeadRead read = self_attend_head(tape, h, z, d_h);
    rows.push_back(read.p);
    if (weights) weights->push_back(read.weights);
  }
  return rows.size() == 1 ? rows[0] : concat_rows(rows);
}

Var context_matrix(Tape& tape, const SharedStack& stack, Var z, std::vector<Var>* weights) {
  require_variant(stack, Variant::gru_sattn, "context_matrix");
  return attend_layer(tape, stack.layers[0], z, stack.config.d_h, weights);
}

Var stacked_context_matrix(Tape& tape, const SharedStack& stack, Var projected, std::vector<Var>* weights) {
  require_variant(stack, Variant::stacked_sattn, "stacked_context_matrix");
  const Var first = attend_layer(tape, stack.layers[0], projected, stack.config.d_h, weights);
  return attend_layer(tape, stack.layers[1], first, stack.config.d_h, weights);
}

Var shared_encode(Tape& tape, const SharedStack& stack, Lang lang, Var annotations, std::vector<Var>* weights) {
  const Var projected = project_in(tape, stack.projection(lang), annotations);
  if (stack.config.variant == Variant::stacked_sattn) return stacked_context_matrix(tape, stack, projected, weights);
  return context_matrix(tape, stack, shared_gru1(tape, stack, projected), weights);
}

Var bridge(Tape& tape, const SharedStack& stack, Var P) {
  const Var k = gru_scan(tape, stack.bridge.gru, P);
  return add(matmul(k, tape.leaf(stack.bridge.W_p)), tape.leaf(stack.bridge.b_p));
}

}  // namespace xdv

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xdv/nn.hpp"

namespace xdv {

enum class Lang { a, b };
inline Lang other(Lang l) { return l == Lang::a ? Lang::b : Lang::a; }
inline const char* lang_name(Lang l) { return l == Lang::a ? "a" : "b"; }

enum class Variant : std::uint32_t {
  gru_sattn = 1,      // GRU_shr1, one self-attentive layer
  stacked_sattn = 2,  // two self-attentive layers, no GRU_shr1
};
const char* variant_name(Variant v);
/// Throws InputError for an unknown name.
Variant parse_variant(const std::string& name);

struct SharedConfig {
  Variant variant = Variant::gru_sattn;
  std::size_t d_h = 32;
  std::size_t r = 4;
  std::size_t key_dim = 64;  // annotation width of both encoders (2 d_enc)
  bool operator==(const SharedConfig&) const = default;
};

/// Affine map from encoder annotations to the shared width: h W_e + b_e.
struct LanguageProjection {
  Tensor W_e;  // [key x d_h]
  Tensor b_e;
};

/// One self-attention head: per-frame score from the frame's own query and key.
struct HeadParams {
  Tensor W_q, W_k, W_v;  // [d_h x d_h]
  Tensor b_q, b_k, b_v;  // [d_h]
};

struct BridgeParams {
  GruParams gru;  // GRU_shr2 over the rows of P
  Tensor W_p;     // [d_h x key]
  Tensor b_p;
};

/// Shared layers between the two translation directions.
struct SharedStack {
  SharedConfig config;
  LanguageProjection proj_a;  // applied to annotations of language a
  LanguageProjection proj_b;
  GruParams gru1;  // empty (0 x 0) in the stacked variant
  std::vector<std::vector<HeadParams>> layers;  // one list of r heads per self-attentive layer
  BridgeParams bridge;

  explicit SharedStack(const SharedConfig& config = {});
  /// Uniform in [-0.08, 0.08] from `seed`.
  static SharedStack initialized(const SharedConfig& config, std::uint64_t seed);

  const LanguageProjection& projection(Lang l) const { return l == Lang::a ? proj_a : proj_b; }
  std::vector<NamedTensor> parameters();
  void set_trainable(bool on);
};

Var project_in(Tape& tape, const LanguageProjection& proj, Var annotations);
/// z_i = GRU_shr1(h_i, z_{i-1}) from a zero state. ContractError on the stacked variant.
Var shared_gru1(Tape& tape, const SharedStack& stack, Var projected);

struct HeadRead {
  Var p;        // [1 x d_h]
  Var weights;  // [frames x 1]
};

/// g_i = softmax_i((z_i W_q + b_q) . (z_i W_k + b_k) / sqrt(d_h)); p = sum_i g_i (z_i W_v + b_v).
HeadRead self_attend_head(Tape& tape, const HeadParams& head, Var z, std::size_t d_h);
/// Rows of one self-attentive layer, [r x d_h]. `weights`, when given, receives each head's weights.
Var attend_layer(Tape& tape, const std::vector<HeadParams>& heads, Var z, std::size_t d_h,
                 std::vector<Var>* weights = nullptr);
/// P for the GRU variant. ContractError on the stacked variant.
Var context_matrix(Tape& tape, const SharedStack& stack, Var z, std::vector<Var>* weights = nullptr);
/// P for the stacked variant: layer one over the frames, layer two over its r outputs.
/// ContractError on the GRU variant.
Var stacked_context_matrix(Tape& tape, const SharedStack& stack, Var projected, std::vector<Var>* weights = nullptr);

/// Annotations of language `lang` to P, through whichever layers the variant has.
Var shared_encode(Tape& tape, const SharedStack& stack, Lang lang, Var annotations,
                  std::vector<Var>* weights = nullptr);

/// K-hat: GRU_shr2 over the rows of P from a zero state, then k W_p + b_p per row.
Var bridge(Tape& tape, const SharedStack& stack, Var P);

}  // namespace xdv

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "xdv/nn.hpp"

namespace xdv {

struct NmtConfig {
  std::size_t src_vocab = 0;
  std::size_t tgt_vocab = 0;
  std::size_t emb = 16;
  std::size_t d_enc = 32;
  std::size_t d_dec = 32;

  std::size_t key_dim() const { return 2 * d_enc; }
  bool operator==(const NmtConfig&) const = default;
};

/// One translation direction: embeddings, bidirectional GRU encoder, and a
/// conditional GRU decoder (GRU, attention read, GRU) with an affine readout
/// over (s_j, c_j, embedding of y_{j-1}).
struct NmtModel {
  NmtConfig config;
  Tensor src_emb;  // [src_vocab x emb]
  Tensor tgt_emb;  // [tgt_vocab x emb]
  GruParams enc_fwd;
  GruParams enc_bwd;
  Tensor W_init;  // [key x d_dec]
  Tensor b_init;
  GruParams dec1;  // input: previous target embedding
  GruParams dec2;  // input: context vector
  AttentionParams att;
  Tensor W_out;  // [(d_dec + key + emb) x tgt_vocab]
  Tensor b_out;

  /// All-zero parameters of the configured shapes.
  explicit NmtModel(const NmtConfig& config = {});
  /// Uniform in [-0.08, 0.08] from `seed`.
  static NmtModel initialized(const NmtConfig& config, std::uint64_t seed);

  std::vector<NamedTensor> parameters();
  void set_trainable(bool on);
  /// True when no parameter requires a gradient.
  bool frozen() const;
};

/// Annotations H [L x 2 d_enc]; row i is [forward state i, backward state i].
/// Throws InputError on an empty sequence or an id outside the source vocabulary.
Var encode(Tape& tape, const NmtModel& model, std::span<const int> src);

struct DecoderState {
  Var s;
  Var s_hat;
  Var c;
  int y_prev = -1;  // -1 before the first output, embedded as zeros
};

struct DecodeStep {
  DecoderState state;
  Var logits;   // [1 x tgt_vocab]
  Var weights;  // attention weights over the memory rows
};

/// s_0 = tanh(mean(keys) W_init + b_init).
DecoderState decoder_start(Tape& tape, const NmtModel& model, const AttentionMemory& memory);
DecodeStep decode_step(Tape& tape, const NmtModel& model, const AttentionMemory& memory, const DecoderState& prev);

/// Teacher-forced logits [|tgt| x tgt_vocab] for reading `tgt` from `keys`.
Var teacher_forced_logits(Tape& tape, const NmtModel& model, Var keys, std::span<const int> tgt);

/// Mean per-token negative log-likelihood of `tgt` given `keys`.
Var sequence_loss_from(Tape& tape, const NmtModel& model, Var keys, std::span<const int> tgt);
/// Mean per-token NLL of `tgt` given `src`. A positive `max_len` bounds both
/// sequence lengths (in ids, end-of-sentence included); longer input is an InputError.
Var sequence_loss(Tape& tape, const NmtModel& model, std::span<const int> src, std::span<const int> tgt,
                  std::size_t max_len = 0);

struct Translation {
  std::vector<int> ids;  // end-of-sentence excluded
  bool truncated = false;
};

/// Greedy decoding from `keys` until end-of-sentence or `max_len` outputs.
Translation greedy_decode(Tape& tape, const NmtModel& model, Var keys, std::size_t max_len);
Translation translate(const NmtModel& model, std::span<const int> src, std::size_t max_len);

/// Teacher-forced argmax hits, end-of-sentence included.
std::size_t correct_tokens(const NmtModel& model, std::span<const int> src, std::span<const int> tgt);

}  // namespace xdv

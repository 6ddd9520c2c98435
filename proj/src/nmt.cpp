// SPDX-License-Identifier: Apache-2.0
#include "xdv/nmt.hpp"

#include <algorithm>

#include "xdv/error.hpp"
#include "xdv/ops.hpp"
#include "xdv/vocabulary.hpp"

namespace xdv {
namespace {

constexpr double kInitScale = 0.08;

void check_ids(std::span<const int> ids, std::size_t vocab, const char* what) {
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw InputError(std::string(what) + " id " + std::to_string(id) + " outside vocabulary of " +
                       std::to_string(vocab));
    }
  }
}

Var previous_embedding(Tape& tape, const NmtModel& model, int y_prev) {
  if (y_prev < 0) return tape.constant(Tensor(Shape{1, model.config.emb}));
  const int id = y_prev;
  return gather_rows(tape.leaf(model.tgt_emb), std::span<const int>(&id, 1));
}

std::size_t argmax_row(const Tensor& logits, std::size_t r) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < logits.cols(); ++c)
    if (logits.at(r, c) > logits.at(r, best)) best = c;
  return best;
}

}  // namespace

NmtModel::NmtModel(const NmtConfig& c)
    : config(c),
      src_emb(Shape{std::max<std::size_t>(c.src_vocab, 1), c.emb}),
      tgt_emb(Shape{std::max<std::size_t>(c.tgt_vocab, 1), c.emb}),
      enc_fwd(GruParams::zeros(c.emb, c.d_enc)),
      enc_bwd(GruParams::zeros(c.emb, c.d_enc)),
      W_init(Shape{c.key_dim(), c.d_dec}),
      b_init(Shape{c.d_dec}),
      dec1(GruParams::zeros(c.emb, c.d_dec)),
      dec2(GruParams::zeros(c.key_dim(), c.d_dec)),
      att(AttentionParams::zeros(c.d_dec, c.key_dim(), c.d_dec)),
      W_out(Shape{c.d_dec + c.key_dim() + c.emb, std::max<std::size_t>(c.tgt_vocab, 1)}),
      b_out(Shape{std::max<std::size_t>(c.tgt_vocab, 1)}) {
  if (c.src_vocab == 0 || c.tgt_vocab == 0 || c.emb == 0 || c.d_enc == 0 || c.d_dec == 0) {
    throw InputError("translation model dimensions must be positive");
  }
}

NmtModel NmtModel::initialized(const NmtConfig& config, std::uint64_t seed) {
  NmtModel m(config);
  init_uniform(m.parameters(), seed, kInitScale);
  return m;
}

std::vector<NamedTensor> NmtModel::parameters() {
  std::vector<NamedTensor> out{{"src_emb", &src_emb}, {"tgt_emb", &tgt_emb}};
  enc_fwd.collect("enc_fwd", out);
  enc_bwd.collect("enc_bwd", out);
  out.push_back({"W_init", &W_init});
  out.push_back({"b_init", &b_init});
  dec1.collect("dec1", out);
  dec2.collect("dec2", out);
  att.collect("att", out);
  out.push_back({"W_out", &W_out});
  out.push_back({"b_out", &b_out});
  return out;
}

void NmtModel::set_trainable(bool on) { xdv::set_trainable(parameters(), on); }

bool NmtModel::frozen() const {
  for (const auto& p : const_cast<NmtModel*>(this)->parameters())
    if (p.tensor->requires_grad()) return false;
  return true;
}

Var encode(Tape& tape, const NmtModel& model, std::span<const int> src) {
  if (src.empty()) throw InputError("cannot encode an empty sequence");
  check_ids(src, model.config.src_vocab, "source");
  const Var x = gather_rows(tape.leaf(model.src_emb), src);
  const Var fwd = gru_scan(tape, model.enc_fwd, x);
  const Var bwd = gru_scan(tape, model.enc_bwd, x, true);
  const Var both[] = {fwd, bwd};
  return concat_cols(both);
}

DecoderState decoder_start(Tape& tape, const NmtModel& model, const AttentionMemory& memory) {
  DecoderState st;
  st.s = tanh(add(matmul(mean_rows(memory.keys), tape.leaf(model.W_init)), tape.leaf(model.b_init)));
  return st;
}

DecodeStep decode_step(Tape& tape, const NmtModel& model, const AttentionMemory& memory, const DecoderState& prev) {
  if (prev.y_prev >= 0 && static_cast<std::size_t>(prev.y_prev) >= model.config.tgt_vocab) {
    throw InputError("target id " + std::to_string(prev.y_prev) + " outside vocabulary of " +
                     std::to_string(model.config.tgt_vocab));
  }
  const Var e = previous_embedding(tape, model, prev.y_prev);
  DecodeStep out;
  out.state.s_hat = gru_step(tape, model.dec1, gru_inputs(tape, model.dec1, e), prev.s);
  const AttentionRead read = attend(tape, model.att, memory, out.state.s_hat);
  out.state.c = read.context;
  out.state.s = gru_step(tape, model.dec2, gru_inputs(tape, model.dec2, read.context), out.state.s_hat);
  out.weights = read.weights;
  const Var features[] = {out.state.s, out.state.c, e};
  out.logits = add(matmul(concat_cols(features), tape.leaf(model.W_out)), tape.leaf(model.b_out));
  return out;
}

Var teacher_forced_logits(Tape& tape, const NmtModel& model, Var keys, std::span<const int> tgt) {
  if (tgt.empty()) throw InputError("empty target sequence");
  check_ids(tgt, model.config.tgt_vocab, "target");
  const std::size_t n = tgt.size();
  const AttentionMemory memory = attention_memory(tape, model.att, keys);

  // Previous-token embeddings for every step: zeros, then tgt[0 .. n-2].
  Var prev = tape.constant(Tensor(Shape{1, model.config.emb}));
  if (n > 1) {
    const Var parts[] = {prev, gather_rows(tape.leaf(model.tgt_emb), tgt.first(n - 1))};
    prev = concat_rows(parts);
  }
  const Var gx1 = gru_inputs(tape, model.dec1, prev);

  Var s = decoder_start(tape, model, memory).s;
  std::vector<Var> states(n), contexts(n);
  for (std::size_t j = 0; j < n; ++j) {
    const Var s_hat = gru_step(tape, model.dec1, row(gx1, j), s);
    const AttentionRead read = attend(tape, model.att, memory, s_hat);
    s = gru_step(tape, model.dec2, gru_inputs(tape, model.dec2, read.context), s_hat);
    states[j] = s;
    contexts[j] = read.context;
  }
  const Var features[] = {n == 1 ? states[0] : concat_rows(states), n == 1 ? contexts[0] : concat_rows(contexts),
                          prev};
  return add(matmul(concat_cols(features), tape.leaf(model.W_out)), tape.leaf(model.b_out));
}

Var sequence_loss_from(Tape& tape, const NmtModel& model, Var keys, std::span<const int> tgt) {
  return cross_entropy(teacher_forced_logits(tape, model, keys, tgt), tgt);
}

Var sequence_loss(Tape& tape, const NmtModel& model, std::span<const int> src, std::span<const int> tgt,
                  std::size_t max_len) {
  if (tgt.empty()) throw InputError("empty target sequence");
  if (max_len > 0 && (src.size() > max_len || tgt.size() > max_len)) {
    throw InputError("sentence pair of lengths " + std::to_string(src.size()) + "/" + std::to_string(tgt.size()) +
                     " exceeds max_len " + std::to_string(max_len));
  }
  return sequence_loss_from(tape, model, encode(tape, model, src), tgt);
}

Translation greedy_decode(Tape& tape, const NmtModel& model, Var keys, std::size_t max_len) {
  Translation out;
  const AttentionMemory memory = attention_memory(tape, model.att, keys);
  DecoderState st = decoder_start(tape, model, memory);
  while (true) {
    if (out.ids.size() >= max_len) {
      out.truncated = true;
      break;
    }
    DecodeStep step = decode_step(tape, model, memory, st);
    const int y = static_cast<int>(argmax_row(step.logits.value(), 0));
    if (y == Vocabulary::kEos) break;
    out.ids.push_back(y);
    st = step.state;
    st.y_prev = y;
  }
  return out;
}

Translation translate(const NmtModel& model, std::span<const int> src, std::size_t max_len) {
  Tape tape(Tape::Mode::inference);
  return greedy_decode(tape, model, encode(tape, model, src), max_len);
}

std::size_t correct_tokens(const NmtModel& model, std::span<const int> src, std::span<const int> tgt) {
  Tape tape(Tape::Mode::inference);
  const Var logits = teacher_forced_logits(tape, model, encode(tape, model, src), tgt);
  std::size_t hits = 0;
  for (std::size_t j = 0; j < tgt.size(); ++j)
    if (static_cast<int>(argmax_row(logits.value(), j)) == tgt[j]) ++hits;
  return hits;
}

}  // namespace xdv

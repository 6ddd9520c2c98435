// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "xdv/adam.hpp"
#include "xdv/error.hpp"
#include "xdv/grad_check.hpp"
#include "xdv/nmt.hpp"
#include "xdv/ops.hpp"
#include "xdv/random.hpp"
#include "xdv/vocabulary.hpp"

using namespace xdv;

namespace {

NmtConfig small_config(std::size_t d = 8) { return {7, 6, 4, d, d}; }

Tensor random_matrix(Rng& rng, std::size_t r, std::size_t c) {
  Tensor t(Shape{r, c});
  for (double& v : t.data()) v = rng.uniform(-1.0, 1.0);
  return t;
}

// Attention evaluated straight from its defining formulas with plain loops.
std::pair<std::vector<double>, std::vector<double>> attention_oracle(const AttentionParams& att, const Tensor& keys,
                                                                     const Tensor& query) {
  const std::size_t n = keys.rows(), a = att.v_a.rows(), k = keys.cols();
  std::vector<double> e(n);
  for (std::size_t i = 0; i < n; ++i) {
    double score = 0.0;
    for (std::size_t t = 0; t < a; ++t) {
      double pre = 0.0;
      for (std::size_t q = 0; q < query.cols(); ++q) pre += query.at(0, q) * att.U_a.at(q, t);
      for (std::size_t q = 0; q < k; ++q) pre += keys.at(i, q) * att.W_a.at(q, t);
      score += att.v_a.at(t, 0) * std::tanh(pre);
    }
    e[i] = score;
  }
  double mx = e[0];
  for (double v : e) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : e) z += std::exp(v - mx);
  std::vector<double> alpha(n), c(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) alpha[i] = std::exp(e[i] - mx) / z;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t q = 0; q < k; ++q) c[q] += alpha[i] * keys.at(i, q);
  return {alpha, c};
}

AttentionParams random_attention(Rng& rng, std::size_t query, std::size_t key, std::size_t att) {
  return {random_matrix(rng, query, att), random_matrix(rng, key, att), random_matrix(rng, att, 1)};
}

void train_pairs(NmtModel& model, const std::vector<std::pair<std::vector<int>, std::vector<int>>>& pairs,
                 int epochs, double alpha) {
  model.set_trainable(true);
  std::vector<Tensor*> params;
  for (auto& p : model.parameters()) params.push_back(p.tensor);
  Adam adam(params, {alpha});
  for (int e = 0; e < epochs; ++e) {
    adam.zero_grad();
    for (const auto& [s, t] : pairs) {
      Tape tape;
      backward(scale(sequence_loss(tape, model, s, t), 1.0 / static_cast<double>(pairs.size())));
    }
    adam.step();
  }
  model.set_trainable(false);
}

}  // namespace

TEST(Encode, ShapesAndErrors) {
  const auto model = NmtModel::initialized(small_config(), 1);
  Tape tape(Tape::Mode::inference);
  const std::vector<int> one{3};
  const Var h = encode(tape, model, one);
  EXPECT_EQ(h.rows(), 1u);
  EXPECT_EQ(h.cols(), 16u);
  EXPECT_THROW(encode(tape, model, std::vector<int>{}), InputError);
  EXPECT_THROW(encode(tape, model, std::vector<int>{7}), InputError);
}

TEST(Encode, ZeroWeightsGiveZeroStates) {
  const NmtModel model(small_config());
  Tape tape(Tape::Mode::inference);
  const std::vector<int> src{3, 4, 5, 2};
  for (double v : encode(tape, model, src).value().data()) EXPECT_EQ(v, 0.0);
}

TEST(Encode, ForwardHalfDependsOnlyOnPrefix) {
  const auto model = NmtModel::initialized(small_config(), 2);
  const std::vector<int> x{3, 4, 5, 6, 2};
  const std::vector<int> y{3, 4, 5, 1, 1, 2};
  Tape tape(Tape::Mode::inference);
  const Tensor hx = encode(tape, model, x).value();
  const Tensor hy = encode(tape, model, y).value();
  const std::size_t d = model.config.d_enc;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t c = 0; c < d; ++c) EXPECT_EQ(hx.at(i, c), hy.at(i, c));
  // The backward half sees the differing suffix.
  EXPECT_NE(hx.at(0, d), hy.at(0, d));
}

TEST(Encode, BackwardHalfDependsOnlyOnSuffix) {
  const auto model = NmtModel::initialized(small_config(), 3);
  const std::vector<int> x{4, 4, 5, 6, 2};
  const std::vector<int> y{1, 5, 6, 2};
  Tape tape(Tape::Mode::inference);
  const Tensor hx = encode(tape, model, x).value();
  const Tensor hy = encode(tape, model, y).value();
  const std::size_t d = model.config.d_enc;
  for (std::size_t i = 1; i < 4; ++i)
    for (std::size_t c = d; c < 2 * d; ++c) EXPECT_EQ(hx.at(i + 1, c), hy.at(i, c));
}

TEST(Attend, SingleFrame) {
  Rng rng(4);
  const auto att = random_attention(rng, 5, 6, 4);
  Tape tape(Tape::Mode::inference);
  const Tensor keys = random_matrix(rng, 1, 6);
  const auto read = attend(tape, att, attention_memory(tape, att, tape.constant(keys)),
                           tape.constant(random_matrix(rng, 1, 5)));
  EXPECT_EQ(read.weights.value()[0], 1.0);
  for (std::size_t q = 0; q < 6; ++q) EXPECT_DOUBLE_EQ(read.context.value()[q], keys[q]);
}

TEST(Attend, ZeroScoringVectorGivesMean) {
  Rng rng(5);
  auto att = random_attention(rng, 5, 6, 4);
  att.v_a = Tensor(Shape{4, 1});
  Tape tape(Tape::Mode::inference);
  const Tensor keys = random_matrix(rng, 4, 6);
  const auto read = attend(tape, att, attention_memory(tape, att, tape.constant(keys)),
                           tape.constant(random_matrix(rng, 1, 5)));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(read.weights.value()[i], 0.25);
  for (std::size_t q = 0; q < 6; ++q) {
    const double mean = (keys.at(0, q) + keys.at(1, q) + keys.at(2, q) + keys.at(3, q)) / 4.0;
    EXPECT_NEAR(read.context.value()[q], mean, 1e-15);
  }
}

TEST(Attend, MatchesFormulaOracleAndNormalises) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.index(12), qd = 1 + rng.index(6), kd = 1 + rng.index(6), ad = 1 + rng.index(6);
    auto att = random_attention(rng, qd, kd, ad);
    for (double& v : att.v_a.data()) v *= 4.0;
    const Tensor keys = random_matrix(rng, n, kd);
    const Tensor query = random_matrix(rng, 1, qd);
    Tape tape(Tape::Mode::inference);
    const auto read = attend(tape, att, attention_memory(tape, att, tape.constant(keys)), tape.constant(query));
    const auto [alpha, c] = attention_oracle(att, keys, query);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = read.weights.value()[i];
      EXPECT_NEAR(w, alpha[i], 1e-12);
      EXPECT_GT(w, 0.0);
      EXPECT_LE(w, 1.0);
      total += w;
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
    for (std::size_t q = 0; q < kd; ++q) EXPECT_NEAR(read.context.value()[q], c[q], 1e-12);
  }
}

TEST(DecodeStep, LogitShapeDeterminismAndBadIds) {
  const auto model = NmtModel::initialized(small_config(), 7);
  const std::vector<int> src{3, 4, 2};
  Tensor first;
  for (int run = 0; run < 2; ++run) {
    Tape tape(Tape::Mode::inference);
    const auto memory = attention_memory(tape, model.att, encode(tape, model, src));
    auto st = decoder_start(tape, model, memory);
    st.y_prev = 4;
    const auto step = decode_step(tape, model, memory, st);
    EXPECT_EQ(step.logits.cols(), model.config.tgt_vocab);
    if (run == 0) {
      first = step.logits.value();
    } else {
      EXPECT_TRUE(identical(first, step.logits.value()));
    }
    st.y_prev = 6;
    EXPECT_THROW(decode_step(tape, model, memory, st), InputError);
  }
}

TEST(DecodeStep, TeacherForcingEqualsStepwiseDecoding) {
  const auto model = NmtModel::initialized(small_config(), 8);
  const std::vector<int> src{3, 4, 5, 2};
  const std::vector<int> tgt{5, 3, 4, 2};
  Tape tape(Tape::Mode::inference);
  const Var keys = encode(tape, model, src);
  const Tensor forced = teacher_forced_logits(tape, model, keys, tgt).value();
  const auto memory = attention_memory(tape, model.att, keys);
  auto st = decoder_start(tape, model, memory);
  for (std::size_t j = 0; j < tgt.size(); ++j) {
    const auto step = decode_step(tape, model, memory, st);
    for (std::size_t v = 0; v < model.config.tgt_vocab; ++v) {
      EXPECT_NEAR(step.logits.value()[v], forced.at(j, v), 1e-12);
    }
    st = step.state;
    st.y_prev = tgt[j];
  }
}

TEST(SequenceLoss, UniformLogitsGiveLogVocab) {
  auto model = NmtModel::initialized(small_config(), 9);
  model.W_out = Tensor(model.W_out.shape());
  model.b_out = Tensor(model.b_out.shape());
  Tape tape(Tape::Mode::inference);
  const std::vector<int> src{3, 2}, tgt{4, 5, 2};
  EXPECT_NEAR(sequence_loss(tape, model, src, tgt).value()[0], std::log(6.0), 1e-12);
}

TEST(SequenceLoss, HandComputedTwoTokenToy) {
  // Readout weights zero, so every step's logits are b_out.
  auto model = NmtModel::initialized({5, 3, 4, 8, 8}, 10);
  model.W_out = Tensor(model.W_out.shape());
  model.b_out = Tensor::vector({0.0, std::log(2.0), std::log(5.0)});
  Tape tape(Tape::Mode::inference);
  const std::vector<int> src{3, 4}, tgt{1, 2};
  // p = [1, 2, 5] / 8: NLL(1) = ln 4, NLL(2) = ln(8/5).
  const double expected = (std::log(4.0) + std::log(8.0 / 5.0)) / 2.0;
  EXPECT_NEAR(sequence_loss(tape, model, src, tgt).value()[0], expected, 1e-12);
}

TEST(SequenceLoss, NonNegativeAndLengthCap) {
  Rng rng(11);
  const auto model = NmtModel::initialized(small_config(), 11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> src(1 + rng.index(8)), tgt(1 + rng.index(8));
    for (int& v : src) v = static_cast<int>(rng.index(7));
    for (int& v : tgt) v = static_cast<int>(rng.index(6));
    Tape tape(Tape::Mode::inference);
    EXPECT_GE(sequence_loss(tape, model, src, tgt).value()[0], 0.0);
  }
  Tape tape(Tape::Mode::inference);
  const std::vector<int> long_src(6, 3), tgt{4, 2};
  EXPECT_THROW(sequence_loss(tape, model, long_src, tgt, 5), InputError);
  EXPECT_NO_THROW(sequence_loss(tape, model, long_src, tgt, 6));
}

TEST(SequenceLoss, GradientsPassFiniteDifferenceCheck) {
  auto model = NmtModel::initialized(small_config(8), 12);
  const std::vector<int> src{3, 4, 5, 6, 2}, tgt{5, 1, 4, 2};
  auto params = model.parameters();
  const auto report = grad_check(taped_objective([&](Tape& t) { return sequence_loss(t, model, src, tgt); }), params);
  for (const auto& e : report.entries) EXPECT_LT(e.max_rel_error, 1e-4) << e.name;
  EXPECT_TRUE(report.passed);
}

TEST(Translate, ZeroLengthAndDeterminism) {
  const auto model = NmtModel::initialized(small_config(), 13);
  const std::vector<int> src{3, 4, 2};
  const auto empty = translate(model, src, 0);
  EXPECT_TRUE(empty.ids.empty());
  EXPECT_TRUE(empty.truncated);
  const auto a = translate(model, src, 10);
  const auto b = translate(model, src, 10);
  EXPECT_EQ(a.ids, b.ids);
  EXPECT_EQ(a.truncated, b.truncated);
  EXPECT_LE(a.ids.size(), 10u);
}

TEST(Translate, MemorisesSinglePair) {
  auto model = NmtModel::initialized(small_config(16), 14);
  const std::vector<int> src{3, 4, 5, 2}, tgt{5, 3, 3, 4, 2};
  train_pairs(model, {{src, tgt}}, 150, 0.01);
  Tape tape(Tape::Mode::inference);
  EXPECT_LT(sequence_loss(tape, model, src, tgt).value()[0], 0.1);
  const auto out = translate(model, src, 20);
  EXPECT_FALSE(out.truncated);
  EXPECT_EQ(out.ids, std::vector<int>(tgt.begin(), tgt.end() - 1));
  EXPECT_EQ(correct_tokens(model, src, tgt), tgt.size());
}

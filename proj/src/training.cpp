// SPDX-License-Identifier: Apache-2.0
#include "xdv/training.hpp"

#include <cmath>
#include <memory>
#include <numeric>

#include "xdv/error.hpp"
#include "xdv/ops.hpp"
#include "xdv/parallel.hpp"

namespace xdv {
namespace {

std::vector<Tensor*> tensor_ptrs(std::vector<NamedTensor> params) {
  std::vector<Tensor*> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.tensor);
  return out;
}

GradSeed scaled_seed(Var node, double factor) { return {node, std::vector<double>(node.value().size(), factor)}; }

GradSeed gradient_seed(Var node, std::span<const double> grad, double factor) {
  GradSeed s{node, std::vector<double>(grad.begin(), grad.end())};
  for (double& g : s.grad) g *= factor;
  return s;
}

}  // namespace

std::vector<std::span<const std::size_t>> make_batches(std::span<const std::size_t> order, std::size_t batch) {
  if (batch == 0) throw InputError("batch size must be positive");
  std::vector<std::span<const std::size_t>> out;
  for (std::size_t start = 0; start < order.size(); start += batch) {
    out.push_back(order.subspan(start, std::min(batch, order.size() - start)));
  }
  if (out.size() > 1 && out.back().size() == 1) {
    const std::size_t start = order.size() - out[out.size() - 2].size() - 1;
    out.pop_back();
    out.back() = order.subspan(start);
  }
  return out;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "order:" + std::to_string(epoch)));
  rng.shuffle(order);
  return order;
}

namespace {

double scheduled_alpha(double alpha, double decay_to, std::size_t step, std::size_t total) {
  if (total < 2) return alpha;
  const double progress = static_cast<double>(step) / static_cast<double>(total - 1);
  return alpha * (1.0 - (1.0 - decay_to) * progress);
}

}  // namespace

void train_nmt_direction(NmtModel& model, std::span<const IdSequence> src, std::span<const IdSequence> tgt,
                         const NmtTrainConfig& config, const NmtBatchCallback& on_batch) {
  if (src.empty()) throw InputError("cannot train on an empty corpus");
  if (src.size() != tgt.size()) throw InputError("source and target sides differ in length");
  model.set_trainable(true);
  Adam adam(tensor_ptrs(model.parameters()), {config.alpha});
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = epoch_order(src.size(), config.seed, epoch);
    const auto batches = make_batches(order, config.batch);
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      adam.set_alpha(scheduled_alpha(config.alpha, config.decay_to, epoch * batches.size() + bi,
                                     config.epochs * batches.size()));
      const auto batch = batches[bi];
      const double weight = 1.0 / static_cast<double>(batch.size());
      std::vector<std::unique_ptr<Tape>> tapes(batch.size());
      std::vector<double> losses(batch.size());
      adam.zero_grad();
      parallel_for(batch.size(), config.threads, [&](std::size_t i) {
        tapes[i] = std::make_unique<Tape>();
        const Var loss = sequence_loss(*tapes[i], model, src[batch[i]], tgt[batch[i]], config.max_len);
        losses[i] = loss.value()[0];
        const GradSeed seed = scaled_seed(loss, weight);
        tapes[i]->backward(std::span<const GradSeed>(&seed, 1));
      });
      // Summing in batch order keeps the update independent of the thread count.
      double mean = 0.0;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        tapes[i]->accumulate_into_leaves();
        mean += losses[i] * weight;
      }
      if (config.clip_norm > 0.0) adam.clip_grad_norm(config.clip_norm);
      adam.step();
      if (on_batch) on_batch({epoch, bi, mean});
    }
  }
  model.set_trainable(false);
}

NmtPair pretrain_nmt(const ParallelCorpus& corpus, std::size_t vocab_a, std::size_t vocab_b, const NmtConfig& dims,
                     const NmtTrainConfig& config, const NmtBatchCallback& on_ab, const NmtBatchCallback& on_ba) {
  if (corpus.size() == 0) throw InputError("cannot pretrain on an empty corpus");
  const std::uint64_t init_seed = derive_seed(config.seed, "nmt");
  NmtConfig ab_dims = dims, ba_dims = dims;
  ab_dims.src_vocab = ba_dims.tgt_vocab = vocab_a;
  ab_dims.tgt_vocab = ba_dims.src_vocab = vocab_b;
  NmtPair out{NmtModel::initialized(ab_dims, init_seed), NmtModel::initialized(ba_dims, init_seed)};
  train_nmt_direction(out.ab, corpus.a, corpus.b, config, on_ab);
  train_nmt_direction(out.ba, corpus.b, corpus.a, config, on_ba);
  return out;
}

double LossConfig::margin_for(std::size_t d_h) const {
  return margin > 0.0 ? margin : 2.0 * std::sqrt(static_cast<double>(d_h));
}

double distance(const Tensor& P_a, const Tensor& P_b) {
  if (!(P_a.shape() == P_b.shape())) {
    throw DimensionError("distance: shapes " + P_a.shape().to_string() + " and " + P_b.shape().to_string());
  }
  double s = 0.0;
  for (std::size_t i = 0; i < P_a.size(); ++i) {
    const double d = P_a[i] - P_b[i];
    s += d * d;
  }
  return s;
}

Var distance_loss(Var P_a, Var P_b) {
  if (!(P_a.value().shape() == P_b.value().shape())) {
    throw DimensionError("distance_loss: shapes " + P_a.value().shape().to_string() + " and " +
                         P_b.value().shape().to_string());
  }
  return squared_norm(sub(P_a, P_b));
}

double negative_sample_loss(double d_pos, double d_neg, double margin) {
  return std::max(0.0, margin + d_pos - d_neg);
}

std::vector<std::size_t> sample_negatives(std::size_t batch, std::size_t self, std::size_t count, Rng& rng) {
  if (batch < 2) throw InputError("negative sampling needs at least two pairs in a batch");
  std::vector<std::size_t> pool;
  for (std::size_t k = 0; k < batch; ++k)
    if (k != self) pool.push_back(k);
  std::vector<std::size_t> out;
  if (count <= pool.size()) {
    for (std::size_t j = 0; j < count; ++j) {
      std::swap(pool[j], pool[j + rng.index(pool.size() - j)]);
      out.push_back(pool[j]);
    }
  } else {
    for (std::size_t j = 0; j < count; ++j) out.push_back(pool[rng.index(pool.size())]);
  }
  return out;
}

BatchView make_view(const ParallelCorpus& corpus, std::span<const std::size_t> indices) {
  BatchView v;
  for (std::size_t i : indices) {
    v.a.push_back(&corpus.a.at(i));
    v.b.push_back(&corpus.b.at(i));
  }
  return v;
}

LossBreakdown combined_loss(const BatchView& batch, const NmtModel& ab, const NmtModel& ba, const SharedStack& stack,
                            const LossConfig& config, std::uint64_t sampler_seed, bool accumulate,
                            std::size_t threads) {
  const std::size_t n = batch.size();
  if (n == 0) throw InputError("empty batch");
  if (config.negatives >= 1 && n < 2) {
    throw InputError("a batch of " + std::to_string(n) + " pair has no negatives to sample");
  }
  if (!(config.beta >= 0.0 && config.beta <= 1.0)) throw InputError("beta must lie in [0, 1]");
  const double beta = config.beta;
  const double weight = 1.0 / static_cast<double>(n);

  struct PairPass {
    std::unique_ptr<Tape> tape;
    Var P_a, P_b, l_ab, l_ba;
  };
  std::vector<PairPass> pass(n);
  const auto mode = accumulate ? Tape::Mode::training : Tape::Mode::inference;
  parallel_for(n, threads, [&](std::size_t i) {
    PairPass& p = pass[i];
    p.tape = std::make_unique<Tape>(mode);
    Tape& t = *p.tape;
    p.P_a = shared_encode(t, stack, Lang::a, encode(t, ab, *batch.a[i]));
    p.P_b = shared_encode(t, stack, Lang::b, encode(t, ba, *batch.b[i]));
    p.l_ab = sequence_loss_from(t, ab, bridge(t, stack, p.P_a), *batch.b[i]);
    p.l_ba = sequence_loss_from(t, ba, bridge(t, stack, p.P_b), *batch.a[i]);
  });

  LossBreakdown out;
  out.beta = beta;
  out.margin = config.margin_for(stack.config.d_h);
  for (const PairPass& p : pass) {
    out.l_mt_ab += p.l_ab.value()[0] * weight;
    out.l_mt_ba += p.l_ba.value()[0] * weight;
  }
  out.l_mt = out.l_mt_ab + out.l_mt_ba;

  // Distance terms on a small tape over copies of the context matrices.
  Tape dist;
  std::vector<Var> pa(n), pb(n);
  std::vector<Var> hinges;
  if (config.negatives > 0) {
    Rng rng(sampler_seed);
    for (std::size_t i = 0; i < n; ++i) {
      pa[i] = dist.variable(pass[i].P_a.value());
      pb[i] = dist.variable(pass[i].P_b.value());
    }
    out.d_pos.resize(n);
    out.d_neg.resize(n);
    out.l_dj.resize(n);
    out.negatives.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Var d_pos = distance_loss(pa[i], pb[i]);
      out.d_pos[i] = d_pos.value()[0];
      out.negatives[i] = sample_negatives(n, i, config.negatives, rng);
      auto add_hinge = [&](Var d_neg) {
        const Var h = relu(add_scalar(sub(d_pos, d_neg), out.margin));
        out.d_neg[i].push_back(d_neg.value()[0]);
        out.l_dj[i].push_back(h.value()[0]);
        hinges.push_back(h);
      };
      for (std::size_t k : out.negatives[i]) add_hinge(distance_loss(pa[i], pb[k]));
      if (config.symmetric_negatives) {
        for (std::size_t k : out.negatives[i]) add_hinge(distance_loss(pb[i], pa[k]));
      }
    }
    for (const auto& row : out.l_dj) {
      double s = 0.0;
      for (double v : row) s += v;
      out.l_d += s * weight;
    }
  }
  out.l_com = beta * out.l_d + (1.0 - beta) * out.l_mt;

  if (!accumulate) return out;
  const bool use_distance = beta > 0.0 && !hinges.empty();
  if (use_distance) {
    const Var l_d = scale(sum(concat_rows(hinges)), weight);
    dist.backward(l_d);
  }
  parallel_for(n, threads, [&](std::size_t i) {
    PairPass& p = pass[i];
    std::vector<GradSeed> seeds;
    if (beta < 1.0) {
      seeds.push_back(scaled_seed(p.l_ab, (1.0 - beta) * weight));
      seeds.push_back(scaled_seed(p.l_ba, (1.0 - beta) * weight));
    }
    if (use_distance) {
      if (auto g = dist.grad(pa[i]); !g.empty()) seeds.push_back(gradient_seed(p.P_a, g, beta));
      if (auto g = dist.grad(pb[i]); !g.empty()) seeds.push_back(gradient_seed(p.P_b, g, beta));
    }
    p.tape->backward(seeds);
  });
  for (const PairPass& p : pass) p.tape->accumulate_into_leaves();
  return out;
}

std::uint64_t batch_seed(std::uint64_t seed, std::size_t epoch, std::size_t batch) {
  return derive_seed(seed, "negatives:" + std::to_string(epoch) + ":" + std::to_string(batch));
}

AdamState train_shared(const ParallelCorpus& corpus, const NmtModel& ab, const NmtModel& ba, SharedStack& stack,
                       const SharedTrainConfig& config, const SharedBatchCallback& on_batch) {
  if (corpus.size() == 0) throw InputError("cannot train on an empty corpus");
  if (!ab.frozen() || !ba.frozen()) throw ContractError("translation models must be frozen before stage two");
  stack.set_trainable(true);
  Adam adam(tensor_ptrs(stack.parameters()), {config.alpha});
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = epoch_order(corpus.size(), config.seed, epoch);
    const auto batches = make_batches(order, config.batch);
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      adam.set_alpha(scheduled_alpha(config.alpha, config.decay_to, epoch * batches.size() + bi,
                                     config.epochs * batches.size()));
      adam.zero_grad();
      LossBreakdown loss = combined_loss(make_view(corpus, batches[bi]), ab, ba, stack, config.loss,
                                         batch_seed(config.seed, epoch, bi), true, config.threads);
      if (config.clip_norm > 0.0) adam.clip_grad_norm(config.clip_norm);
      adam.step();
      if (on_batch) on_batch({epoch, bi, std::move(loss)});
    }
  }
  stack.set_trainable(false);
  return adam.state();
}

Tensor context_of(const NmtModel& encoder, const SharedStack& stack, Lang lang, std::span<const int> ids) {
  Tape tape(Tape::Mode::inference);
  return shared_encode(tape, stack, lang, encode(tape, encoder, ids)).value();
}

double mean_paired_distance(const ParallelCorpus& corpus, const NmtModel& ab, const NmtModel& ba,
                            const SharedStack& stack) {
  if (corpus.size() == 0) throw InputError("empty corpus");
  double total = 0.0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    total += distance(context_of(ab, stack, Lang::a, corpus.a[i]), context_of(ba, stack, Lang::b, corpus.b[i]));
  }
  return total / static_cast<double>(corpus.size());
}

}  // namespace xdv

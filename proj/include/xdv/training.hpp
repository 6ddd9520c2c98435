// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "xdv/adam.hpp"
#include "xdv/nmt.hpp"
#include "xdv/pipeline.hpp"
#include "xdv/random.hpp"
#include "xdv/shared.hpp"

namespace xdv {

struct NmtTrainConfig {
  std::size_t epochs = 10;
  std::size_t batch = 80;
  double alpha = 1e-3;
  std::uint64_t seed = 1;
  std::size_t max_len = 50;
  std::size_t threads = 1;
  double clip_norm = 0.0;  // global gradient-norm bound; 0 disables
  double decay_to = 1.0;   // alpha fraction reached linearly by the last step
};

struct NmtBatchRecord {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  double loss = 0.0;  // mean over the batch of per-sentence mean NLL
};

using NmtBatchCallback = std::function<void(const NmtBatchRecord&)>;

/// Consecutive slices of `order`; a trailing batch of one joins its predecessor.
std::vector<std::span<const std::size_t>> make_batches(std::span<const std::size_t> order, std::size_t batch);
/// Pair order for one epoch, shuffled from (seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch);

/// Trains one direction in place with Adam on mean per-token cross-entropy.
/// Leaves the model frozen (requires_grad off) on return.
void train_nmt_direction(NmtModel& model, std::span<const IdSequence> src, std::span<const IdSequence> tgt,
                         const NmtTrainConfig& config, const NmtBatchCallback& on_batch = {});

struct NmtPair {
  NmtModel ab;
  NmtModel ba;
};

/// Stage one: initialises and trains a->b and b->a independently. Both
/// directions use the same seed streams, so swapping the corpus sides swaps
/// the resulting models. InputError on an empty corpus.
NmtPair pretrain_nmt(const ParallelCorpus& corpus, std::size_t vocab_a, std::size_t vocab_b, const NmtConfig& dims,
                     const NmtTrainConfig& config, const NmtBatchCallback& on_ab = {},
                     const NmtBatchCallback& on_ba = {});

struct LossConfig {
  double beta = 0.5;
  std::size_t negatives = 20;  // N_s
  double margin = 0.0;         // non-positive selects 2 sqrt(d_h)
  bool symmetric_negatives = false;

  double margin_for(std::size_t d_h) const;
};

/// Squared Frobenius norm of P_a - P_b.
double distance(const Tensor& P_a, const Tensor& P_b);
Var distance_loss(Var P_a, Var P_b);
/// max(0, mrg + d_pos - d_neg).
double negative_sample_loss(double d_pos, double d_neg, double margin);

/// Per-batch loss record. d_neg, negatives and l_dj hold one list per pair.
struct LossBreakdown {
  double l_mt_ab = 0.0;
  double l_mt_ba = 0.0;
  double l_mt = 0.0;
  std::vector<double> d_pos;
  std::vector<std::vector<double>> d_neg;
  std::vector<std::vector<std::size_t>> negatives;  // batch positions of the sampled b sides
  std::vector<std::vector<double>> l_dj;
  double l_d = 0.0;  // mean over pairs of the per-pair hinge sum
  double l_com = 0.0;
  double beta = 0.0;
  double margin = 0.0;
};

/// Distinct batch positions other than `self`, N_s of them when the batch
/// allows it, otherwise drawn with replacement.
std::vector<std::size_t> sample_negatives(std::size_t batch, std::size_t self, std::size_t count, Rng& rng);

struct BatchView {
  std::vector<const IdSequence*> a;
  std::vector<const IdSequence*> b;
  std::size_t size() const { return a.size(); }
};

BatchView make_view(const ParallelCorpus& corpus, std::span<const std::size_t> indices);

/// l_com = beta l_d + (1 - beta) l_mt over one batch, with translation losses
/// read through the shared stack. With `accumulate` set, d l_com / d theta is
/// added into the grad buffer of every trainable stack tensor.
/// InputError when N_s >= 1 and the batch has fewer than two pairs.
LossBreakdown combined_loss(const BatchView& batch, const NmtModel& ab, const NmtModel& ba, const SharedStack& stack,
                            const LossConfig& config, std::uint64_t sampler_seed, bool accumulate,
                            std::size_t threads = 1);

struct SharedTrainConfig {
  std::size_t epochs = 10;
  std::size_t batch = 40;
  double alpha = 1e-3;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  double clip_norm = 0.0;
  double decay_to = 1.0;
  LossConfig loss;
};

struct SharedBatchRecord {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  LossBreakdown loss;
};

using SharedBatchCallback = std::function<void(const SharedBatchRecord&)>;

/// Stage two: Adam on the shared stack only. `ab` and `ba` must be frozen.
/// Returns the optimizer state for checkpointing.
AdamState train_shared(const ParallelCorpus& corpus, const NmtModel& ab, const NmtModel& ba, SharedStack& stack,
                       const SharedTrainConfig& config, const SharedBatchCallback& on_batch = {});

/// Sampler seed of one stage-two batch.
std::uint64_t batch_seed(std::uint64_t seed, std::size_t epoch, std::size_t batch);

/// P of sentence `ids` in language `lang` through its own encoder and the stack.
Tensor context_of(const NmtModel& encoder, const SharedStack& stack, Lang lang, std::span<const int> ids);

/// Mean squared-Frobenius distance between the context matrices of aligned pairs.
double mean_paired_distance(const ParallelCorpus& corpus, const NmtModel& ab, const NmtModel& ba,
                            const SharedStack& stack);

}  // namespace xdv

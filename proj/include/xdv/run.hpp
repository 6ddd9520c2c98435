// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "xdv/adam.hpp"
#include "xdv/config.hpp"
#include "xdv/nmt.hpp"
#include "xdv/pipeline.hpp"
#include "xdv/shared.hpp"

// Two-stage training runs and the model directory that holds their results:
//   pipeline/            BPE merges and vocabularies of both languages
//   nmt.ab.ckpt          stage one, a->b
//   nmt.ba.ckpt          stage one, b->a
//   shared.ckpt          stage two, with the digests of the stage-one files it was trained against
namespace xdv {

struct ModelDir {
  std::filesystem::path root;
  std::filesystem::path pipeline() const { return root / "pipeline"; }
  std::filesystem::path nmt(Lang source) const { return root / (source == Lang::a ? "nmt.ab.ckpt" : "nmt.ba.ckpt"); }
  std::filesystem::path shared() const { return root / "shared.ckpt"; }
};

struct StageOne {
  Pipeline pipeline;
  NmtModel ab;
  NmtModel ba;
};

/// Learns BPE and vocabularies on `text`, then trains both translation
/// directions. One metrics line per batch: direction, epoch, batch, loss.
StageOne run_stage_one(const ParallelText& text, const RunConfig& config, std::ostream* metrics = nullptr);

/// Shared stack initialised from the run seed and trained on `corpus` with the
/// stage-one models held fixed. One metrics line per batch: epoch, batch,
/// l_com, l_mt, l_mt_ab, l_mt_ba, l_d, mean d_pos, mean d_neg.
/// Throws std::logic_error if a stage-one tensor changed.
SharedStack run_stage_two(const ParallelCorpus& corpus, StageOne& models, const RunConfig& config,
                          std::ostream* metrics = nullptr, AdamState* optimizer = nullptr);

void save_stage_one(const ModelDir& dir, StageOne& models, const RunConfig& config);
/// InputError naming the missing file when stage one has not been run.
StageOne load_stage_one(const ModelDir& dir);

void save_stage_two(const ModelDir& dir, SharedStack& stack, const RunConfig& config,
                    const std::optional<AdamState>& optimizer = std::nullopt);
/// InputError when shared.ckpt is missing; FormatError when it was trained
/// against different stage-one checkpoints or with another variant.
SharedStack load_stage_two(const ModelDir& dir, std::optional<Variant> expected = std::nullopt);

/// SHA-256 hex of every parameter of `model`, in parameter order.
std::vector<std::string> parameter_digests(NmtModel& model);

}  // namespace xdv

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "xdv/docvec.hpp"
#include "xdv/eval.hpp"
#include "xdv/nmt.hpp"
#include "xdv/pipeline.hpp"
#include "xdv/shared.hpp"
#include "xdv/synthetic.hpp"
#include "xdv/training.hpp"

namespace xdv {

/// Every setting of a run, from corpus preparation to evaluation.
struct RunConfig {
  std::string profile = "desk";
  std::uint64_t seed = 1;
  std::size_t threads = 1;

  Variant variant = Variant::gru_sattn;
  std::size_t d_h = 32;
  std::size_t r = 4;
  NmtConfig nmt_dims;  // vocabulary sizes are filled in from the pipeline

  PipelineConfig pipeline;
  NmtTrainConfig nmt;
  SharedTrainConfig shared;

  ClassifierConfig classifier;
  std::size_t tfidf_top_k = 1000;
  ComposeOptions compose;
  std::string sentence_end = ".";

  SyntheticSizes synthetic;

  SharedConfig shared_config() const { return {variant, d_h, r, nmt_dims.key_dim()}; }
  /// Copies seed and thread count into the per-stage configs.
  void sync();
};

/// Built-in profile "paper" or "desk" for `variant`. InputError for another name.
RunConfig make_profile(const std::string& profile, Variant variant);

/// Applies "section.key = value" settings from INI text over `base`.
/// InputError naming the key for unknown keys or unparsable values.
RunConfig apply_ini(const RunConfig& base, const std::string& ini_text, const std::string& origin = "config");
RunConfig apply_ini_file(const RunConfig& base, const std::filesystem::path& path);

/// Resolved configuration as INI text; apply_ini of it over any base reproduces `config`.
std::string to_ini(const RunConfig& config);

}  // namespace xdv

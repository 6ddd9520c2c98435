// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "xdv/bpe.hpp"
#include "xdv/shared.hpp"
#include "xdv/vocabulary.hpp"

namespace xdv {

/// Non-empty lines of a text file, trailing CR stripped. InputError if unreadable.
std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);

struct ParallelText {
  std::vector<std::string> a;
  std::vector<std::string> b;
};

/// Two aligned files, one sentence per line. InputError when the line counts differ.
ParallelText read_parallel(const std::filesystem::path& a, const std::filesystem::path& b);

struct PipelineConfig {
  std::size_t merges = 500;
  std::size_t vocab_limit = 2000;
  bool joint_bpe = false;  // one merge list learned over both languages
};

/// Text <-> id conversion for both languages: BPE, then a vocabulary lookup.
class Pipeline {
 public:
  Pipeline() = default;
  Pipeline(BpeModel bpe_a, BpeModel bpe_b, Vocabulary vocab_a, Vocabulary vocab_b, bool joint_bpe);

  static Pipeline learn(const ParallelText& text, const PipelineConfig& config);

  const BpeModel& bpe(Lang l) const { return l == Lang::a ? bpe_a_ : bpe_b_; }
  const Vocabulary& vocab(Lang l) const { return l == Lang::a ? vocab_a_ : vocab_b_; }
  bool joint_bpe() const { return joint_bpe_; }

  /// Subword ids of a whole line followed by end-of-sentence.
  std::vector<int> encode(Lang l, std::string_view line) const;
  std::string decode(Lang l, std::span<const int> ids) const;

  /// bpe.a.merges, bpe.b.merges, vocab.a.tsv, vocab.b.tsv under `dir`.
  void save(const std::filesystem::path& dir) const;
  static Pipeline load(const std::filesystem::path& dir);

 private:
  BpeModel bpe_a_, bpe_b_;
  Vocabulary vocab_a_, vocab_b_;
  bool joint_bpe_ = false;
};

using IdSequence = std::vector<int>;

struct ParallelCorpus {
  std::vector<IdSequence> a;
  std::vector<IdSequence> b;
  std::size_t dropped = 0;  // pairs left out for exceeding max_len
  std::size_t size() const { return a.size(); }
};

/// Encodes aligned text, leaving out pairs with either side longer than
/// `max_len` ids (0 keeps everything).
ParallelCorpus encode_parallel(const Pipeline& pipeline, const ParallelText& text, std::size_t max_len);

}  // namespace xdv

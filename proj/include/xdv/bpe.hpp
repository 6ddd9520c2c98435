// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace xdv {

/// Suffix carried by the last symbol of every word.
inline constexpr std::string_view kEndOfWord = "</w>";

struct MergeRule {
  std::string left;
  std::string right;
  bool operator==(const MergeRule&) const = default;
};

/// Ordered byte-pair merges; rule i has priority i (lower merges first).
class BpeModel {
 public:
  BpeModel() = default;
  /// Throws InputError on a duplicated rule or a symbol containing whitespace.
  explicit BpeModel(std::vector<MergeRule> merges);

  const std::vector<MergeRule>& merges() const { return merges_; }
  std::size_t num_merges() const { return merges_.size(); }

  /// Characters of `word` with the end-of-word marker on the last one, merged
  /// by replaying the rules in priority order.
  std::vector<std::string> segment(std::string_view word) const;
  /// Segments every word; the output is the concatenation of the segmentations.
  std::vector<std::string> apply(std::span<const std::string> words) const;

  /// One rule per line: "left right\n".
  std::string to_text() const;
  static BpeModel from_text(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static BpeModel load(const std::filesystem::path& path);

 private:
  std::vector<MergeRule> merges_;
  std::unordered_map<std::string, std::size_t> rank_;
};

/// Greedy most-frequent-pair learning over a whitespace token stream.
/// Ties go to the lexicographically smallest (left, right) pair; learning
/// stops early once no pair occurs at least twice. Throws InputError on an
/// empty corpus.
BpeModel learn_bpe(std::span<const std::string> words, std::size_t num_merges);

/// Whitespace tokenisation of one line.
std::vector<std::string> split_words(std::string_view line);
/// UTF-8 code points of `word` as separate strings.
std::vector<std::string> split_characters(std::string_view word);
/// Inverse of segmentation: concatenates subwords, ending a word at each marker.
std::vector<std::string> merge_subwords(std::span<const std::string> subwords);
std::string join(std::span<const std::string> tokens, std::string_view sep = " ");

}  // namespace xdv

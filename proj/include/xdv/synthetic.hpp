// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "xdv/pipeline.hpp"

namespace xdv {

struct LabeledDoc {
  int label = 0;
  std::string text;
};

/// "label TAB text" per line.
std::vector<LabeledDoc> read_labeled(const std::filesystem::path& path);
void write_labeled(const std::filesystem::path& path, const std::vector<LabeledDoc>& docs);

struct SyntheticSizes {
  std::size_t parallel = 2000;
  std::size_t heldout = 200;
  std::size_t train_docs = 400;  // per language
  std::size_t test_docs = 400;   // per language
  std::size_t line_sentences = 1;  // parallel training lines hold 1..line_sentences sentences of one topic
  std::size_t topic_words = 25;  // per category
  std::size_t general_words = 40;
  std::size_t function_words = 12;
};

inline constexpr std::size_t kSyntheticCategories = 4;

/// A cipher language pair over four topic lexicons. Language b replaces each
/// word of language a through a fixed bijection and then swaps adjacent
/// content-word pairs left to right, which is its own inverse.
struct SyntheticTask {
  std::uint64_t seed = 0;
  SyntheticSizes sizes;
  std::vector<std::string> words_a;  // cipher: words_a[i] <-> words_b[i]
  std::vector<std::string> words_b;
  std::vector<std::vector<std::size_t>> topics;  // word indices per category
  std::vector<std::size_t> general;
  std::vector<std::size_t> function;
  std::string stop_a = ".";
  std::string stop_b = ".";
  ParallelText parallel;
  ParallelText heldout;
  std::vector<LabeledDoc> train_a, train_b, test_a, test_b;

  std::string to_b(const std::string& text_a) const;
  std::string to_a(const std::string& text_b) const;
  bool is_content(std::size_t word) const { return word < words_a.size() - function.size(); }
};

/// Fully determined by `seed`. InputError on zero sizes.
SyntheticTask make_synthetic_task(std::uint64_t seed, const SyntheticSizes& sizes = {});

/// parallel.{a,b}.txt, heldout.{a,b}.txt, {train,test}.{a,b}.tsv, cipher.tsv, manifest.json.
void write_synthetic_task(const SyntheticTask& task, const std::filesystem::path& dir);

}  // namespace xdv

// SPDX-License-Identifier: Apache-2.0
#include "xdv/pipeline.hpp"

#include <fstream>

#include "xdv/error.hpp"

namespace xdv {
namespace {

std::vector<std::vector<std::string>> segment_lines(const BpeModel& bpe, const std::vector<std::string>& lines) {
  std::vector<std::vector<std::string>> out;
  out.reserve(lines.size());
  for (const auto& line : lines) out.push_back(bpe.apply(split_words(line)));
  return out;
}

std::vector<std::string> all_words(const std::vector<std::string>& lines) {
  std::vector<std::string> words;
  for (const auto& line : lines) {
    auto w = split_words(line);
    words.insert(words.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
  }
  return words;
}

}  // namespace

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
}

ParallelText read_parallel(const std::filesystem::path& a, const std::filesystem::path& b) {
  ParallelText t{read_lines(a), read_lines(b)};
  if (t.a.size() != t.b.size()) {
    throw InputError("parallel files differ in length: " + std::to_string(t.a.size()) + " vs " +
                     std::to_string(t.b.size()) + " lines");
  }
  return t;
}

Pipeline::Pipeline(BpeModel bpe_a, BpeModel bpe_b, Vocabulary vocab_a, Vocabulary vocab_b, bool joint_bpe)
    : bpe_a_(std::move(bpe_a)),
      bpe_b_(std::move(bpe_b)),
      vocab_a_(std::move(vocab_a)),
      vocab_b_(std::move(vocab_b)),
      joint_bpe_(joint_bpe) {}

Pipeline Pipeline::learn(const ParallelText& text, const PipelineConfig& config) {
  if (text.a.empty()) throw InputError("empty parallel corpus");
  BpeModel bpe_a, bpe_b;
  if (config.joint_bpe) {
    auto words = all_words(text.a);
    auto wb = all_words(text.b);
    words.insert(words.end(), wb.begin(), wb.end());
    bpe_a = bpe_b = learn_bpe(words, config.merges);
  } else {
    bpe_a = learn_bpe(all_words(text.a), config.merges);
    bpe_b = learn_bpe(all_words(text.b), config.merges);
  }
  auto vocab_a = Vocabulary::build(segment_lines(bpe_a, text.a), config.vocab_limit);
  auto vocab_b = Vocabulary::build(segment_lines(bpe_b, text.b), config.vocab_limit);
  return Pipeline(std::move(bpe_a), std::move(bpe_b), std::move(vocab_a), std::move(vocab_b), config.joint_bpe);
}

std::vector<int> Pipeline::encode(Lang l, std::string_view line) const {
  return vocab(l).encode(bpe(l).apply(split_words(line)));
}

std::string Pipeline::decode(Lang l, std::span<const int> ids) const {
  return join(merge_subwords(vocab(l).decode(ids)));
}

void Pipeline::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  bpe_a_.save(dir / "bpe.a.merges");
  bpe_b_.save(dir / "bpe.b.merges");
  vocab_a_.save(dir / "vocab.a.tsv");
  vocab_b_.save(dir / "vocab.b.tsv");
}

Pipeline Pipeline::load(const std::filesystem::path& dir) {
  auto bpe_a = BpeModel::load(dir / "bpe.a.merges");
  auto bpe_b = BpeModel::load(dir / "bpe.b.merges");
  const bool joint = bpe_a.merges() == bpe_b.merges();
  return Pipeline(std::move(bpe_a), std::move(bpe_b), Vocabulary::load(dir / "vocab.a.tsv"),
                  Vocabulary::load(dir / "vocab.b.tsv"), joint);
}

ParallelCorpus encode_parallel(const Pipeline& pipeline, const ParallelText& text, std::size_t max_len) {
  if (text.a.size() != text.b.size()) throw InputError("parallel text sides differ in length");
  ParallelCorpus c;
  for (std::size_t i = 0; i < text.a.size(); ++i) {
    auto a = pipeline.encode(Lang::a, text.a[i]);
    auto b = pipeline.encode(Lang::b, text.b[i]);
    if (max_len > 0 && (a.size() > max_len || b.size() > max_len)) {
      ++c.dropped;
      continue;
    }
    c.a.push_back(std::move(a));
    c.b.push_back(std::move(b));
  }
  return c;
}

}  // namespace xdv

// SPDX-License-Identifier: Apache-2.0
#include "xdv/synthetic.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <unordered_map>

#include "json.hpp"

#include "xdv/bpe.hpp"
#include "xdv/error.hpp"
#include "xdv/random.hpp"

namespace xdv {
namespace {

constexpr double kTopicWordRate = 0.6;
constexpr double kFunctionWordRate = 0.4;

std::vector<std::string> make_words(Rng& rng, std::string_view consonants, std::string_view vowels,
                                    std::size_t content, std::size_t function) {
  std::set<std::string> seen;
  std::vector<std::string> out;
  auto draw = [&](std::size_t min_syl, std::size_t max_syl) {
    while (true) {
      const std::size_t syllables = min_syl + rng.index(max_syl - min_syl + 1);
      std::string w;
      for (std::size_t s = 0; s < syllables; ++s) {
        w += consonants[rng.index(consonants.size())];
        w += vowels[rng.index(vowels.size())];
      }
      if (seen.insert(w).second) return w;
    }
  };
  for (std::size_t i = 0; i < content; ++i) out.push_back(draw(2, 3));
  for (std::size_t i = 0; i < function; ++i) out.push_back(draw(1, 1));
  return out;
}

// Swaps adjacent content-word pairs scanning left to right. Content positions
// are unchanged by the swap, so applying it twice restores the input.
void reorder(std::vector<std::string>& tokens, const std::vector<bool>& content) {
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    if (content[i] && content[i + 1]) {
      std::swap(tokens[i], tokens[i + 1]);
      ++i;
    }
  }
}

std::string translate_text(const std::string& text, const std::unordered_map<std::string, std::size_t>& index,
                           const std::vector<std::string>& target, const std::string& stop_from,
                           const std::string& stop_to, const SyntheticTask& task) {
  auto tokens = split_words(text);
  std::vector<bool> content(tokens.size(), false);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == stop_from) {
      tokens[i] = stop_to;
      continue;
    }
    const auto it = index.find(tokens[i]);
    if (it == index.end()) throw InputError("word '" + tokens[i] + "' is not in the synthetic lexicon");
    content[i] = task.is_content(it->second);
    tokens[i] = target[it->second];
  }
  reorder(tokens, content);
  return join(tokens);
}

struct Generator {
  const SyntheticTask& task;
  Rng& rng;

  std::string sentence(std::size_t topic) {
    std::vector<std::string> tokens;
    const std::size_t n = 3 + rng.index(4);
    for (std::size_t k = 0; k < n; ++k) {
      if (rng.bernoulli(kFunctionWordRate)) tokens.push_back(task.words_a[task.function[rng.index(task.function.size())]]);
      const auto& pool = rng.bernoulli(kTopicWordRate) ? task.topics[topic] : task.general;
      tokens.push_back(task.words_a[pool[rng.index(pool.size())]]);
    }
    tokens.push_back(task.stop_a);
    return join(tokens);
  }

  std::string document(std::size_t topic) {
    const std::size_t n = 3 + rng.index(4);
    std::string doc;
    for (std::size_t s = 0; s < n; ++s) {
      if (s) doc += ' ';
      doc += sentence(topic);
    }
    return doc;
  }

  std::vector<LabeledDoc> documents(std::size_t count, bool language_b) {
    std::vector<int> labels(count);
    for (std::size_t i = 0; i < count; ++i) labels[i] = static_cast<int>(i % kSyntheticCategories);
    rng.shuffle(labels);
    std::vector<LabeledDoc> out;
    for (int label : labels) {
      std::string text = document(static_cast<std::size_t>(label));
      out.push_back({label, language_b ? task.to_b(text) : text});
    }
    return out;
  }

  ParallelText parallel(std::size_t count, std::size_t max_sentences) {
    ParallelText t;
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t topic = rng.index(kSyntheticCategories);
      const std::size_t n = max_sentences > 1 ? 1 + rng.index(max_sentences) : 1;
      std::string line = sentence(topic);
      for (std::size_t s = 1; s < n; ++s) line += ' ' + sentence(topic);
      t.a.push_back(line);
      t.b.push_back(task.to_b(line));
    }
    return t;
  }
};

std::unordered_map<std::string, std::size_t> index_of(const std::vector<std::string>& words) {
  std::unordered_map<std::string, std::size_t> m;
  for (std::size_t i = 0; i < words.size(); ++i) m.emplace(words[i], i);
  return m;
}

}  // namespace

std::vector<LabeledDoc> read_labeled(const std::filesystem::path& path) {
  std::vector<LabeledDoc> docs;
  for (const auto& line : read_lines(path)) {
    const auto tab = line.find('\t');
    int label = -1;
    if (tab == std::string::npos ||
        std::from_chars(line.data(), line.data() + tab, label).ptr != line.data() + tab || label < 0) {
      throw InputError(path.string() + " line " + std::to_string(docs.size() + 1) + ": expected 'label<TAB>text'");
    }
    docs.push_back({label, line.substr(tab + 1)});
  }
  return docs;
}

void write_labeled(const std::filesystem::path& path, const std::vector<LabeledDoc>& docs) {
  std::vector<std::string> lines;
  for (const auto& d : docs) lines.push_back(std::to_string(d.label) + "\t" + d.text);
  write_lines(path, lines);
}

std::string SyntheticTask::to_b(const std::string& text_a) const {
  return translate_text(text_a, index_of(words_a), words_b, stop_a, stop_b, *this);
}

std::string SyntheticTask::to_a(const std::string& text_b) const {
  return translate_text(text_b, index_of(words_b), words_a, stop_b, stop_a, *this);
}

SyntheticTask make_synthetic_task(std::uint64_t seed, const SyntheticSizes& sizes) {
  if (sizes.parallel == 0 || sizes.heldout == 0 || sizes.train_docs == 0 || sizes.test_docs == 0 ||
      sizes.line_sentences == 0 || sizes.topic_words == 0 || sizes.general_words == 0 || sizes.function_words == 0) {
    throw InputError("synthetic task sizes must all be positive");
  }
  SyntheticTask task;
  task.seed = seed;
  task.sizes = sizes;
  const std::size_t content = kSyntheticCategories * sizes.topic_words + sizes.general_words;
  Rng lex(derive_seed(seed, "lexicon"));
  task.words_a = make_words(lex, "bdgklmnprst", "aeiou", content, sizes.function_words);
  task.words_b = make_words(lex, "cfhjqvwxz", "aeiou", content, sizes.function_words);
  std::size_t next = 0;
  task.topics.resize(kSyntheticCategories);
  for (auto& t : task.topics)
    for (std::size_t i = 0; i < sizes.topic_words; ++i) t.push_back(next++);
  for (std::size_t i = 0; i < sizes.general_words; ++i) task.general.push_back(next++);
  for (std::size_t i = 0; i < sizes.function_words; ++i) task.function.push_back(next++);

  Rng rng(derive_seed(seed, "text"));
  Generator gen{task, rng};
  task.parallel = gen.parallel(sizes.parallel, sizes.line_sentences);
  task.heldout = gen.parallel(sizes.heldout, 1);
  task.train_a = gen.documents(sizes.train_docs, false);
  task.train_b = gen.documents(sizes.train_docs, true);
  task.test_a = gen.documents(sizes.test_docs, false);
  task.test_b = gen.documents(sizes.test_docs, true);
  return task;
}

void write_synthetic_task(const SyntheticTask& task, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_lines(dir / "parallel.a.txt", task.parallel.a);
  write_lines(dir / "parallel.b.txt", task.parallel.b);
  write_lines(dir / "heldout.a.txt", task.heldout.a);
  write_lines(dir / "heldout.b.txt", task.heldout.b);
  write_labeled(dir / "train.a.tsv", task.train_a);
  write_labeled(dir / "train.b.tsv", task.train_b);
  write_labeled(dir / "test.a.tsv", task.test_a);
  write_labeled(dir / "test.b.tsv", task.test_b);
  std::vector<std::string> cipher;
  for (std::size_t i = 0; i < task.words_a.size(); ++i) cipher.push_back(task.words_a[i] + "\t" + task.words_b[i]);
  cipher.push_back(task.stop_a + "\t" + task.stop_b);
  write_lines(dir / "cipher.tsv", cipher);

  nlohmann::ordered_json m;
  m["seed"] = task.seed;
  m["categories"] = kSyntheticCategories;
  m["sizes"] = {{"parallel", task.sizes.parallel},         {"heldout", task.sizes.heldout},
                {"train_docs", task.sizes.train_docs},     {"test_docs", task.sizes.test_docs},
                {"topic_words", task.sizes.topic_words},   {"general_words", task.sizes.general_words},
                {"function_words", task.sizes.function_words}, {"line_sentences", task.sizes.line_sentences}};
  m["files"] = {{"parallel", {"parallel.a.txt", "parallel.b.txt"}},
                {"heldout", {"heldout.a.txt", "heldout.b.txt"}},
                {"train", {"train.a.tsv", "train.b.tsv"}},
                {"test", {"test.a.tsv", "test.b.tsv"}},
                {"cipher", "cipher.tsv"}};
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw InputError("cannot write " + (dir / "manifest.json").string());
  out << m.dump(2) << '\n';
}

}  // namespace xdv

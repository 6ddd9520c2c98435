// SPDX-License-Identifier: Apache-2.0
#include "xdv/bpe.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "xdv/error.hpp"

namespace xdv {
namespace {

std::string pair_key(std::string_view a, std::string_view b) {
  std::string k;
  k.reserve(a.size() + b.size() + 1);
  k.append(a).push_back(' ');
  k.append(b);
  return k;
}

std::vector<std::string> initial_symbols(std::string_view word) {
  auto chars = split_characters(word);
  if (!chars.empty()) chars.back() += kEndOfWord;
  return chars;
}

// Merges every non-overlapping occurrence of (a, b), scanning left to right.
void merge_pair(std::vector<std::string>& symbols, const std::string& a, const std::string& b) {
  std::vector<std::string> out;
  out.reserve(symbols.size());
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (i + 1 < symbols.size() && symbols[i] == a && symbols[i + 1] == b) {
      out.push_back(a + b);
      ++i;
    } else {
      out.push_back(std::move(symbols[i]));
    }
  }
  symbols = std::move(out);
}

bool has_space(std::string_view s) {
  return s.empty() || s.find_first_of(" \t\r\n") != std::string_view::npos;
}

}  // namespace

BpeModel::BpeModel(std::vector<MergeRule> merges) : merges_(std::move(merges)) {
  for (std::size_t i = 0; i < merges_.size(); ++i) {
    const auto& m = merges_[i];
    if (has_space(m.left) || has_space(m.right)) {
      throw InputError("merge rule " + std::to_string(i) + " has an empty or whitespace symbol");
    }
    if (!rank_.emplace(pair_key(m.left, m.right), i).second) {
      throw InputError("duplicate merge rule '" + m.left + " " + m.right + "'");
    }
  }
}

std::vector<std::string> BpeModel::segment(std::string_view word) const {
  auto symbols = initial_symbols(word);
  // Replaying rules in order is the same as repeatedly applying the
  // lowest-ranked present pair whose rank exceeds the last one applied.
  std::size_t last = 0;
  bool started = false;
  while (symbols.size() > 1) {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      auto it = rank_.find(pair_key(symbols[i], symbols[i + 1]));
      if (it == rank_.end()) continue;
      if (started && it->second <= last) continue;
      best = std::min(best, it->second);
    }
    if (best == std::numeric_limits<std::size_t>::max()) break;
    merge_pair(symbols, merges_[best].left, merges_[best].right);
    last = best;
    started = true;
  }
  return symbols;
}

std::vector<std::string> BpeModel::apply(std::span<const std::string> words) const {
  std::vector<std::string> out;
  std::unordered_map<std::string, std::vector<std::string>> cache;
  for (const std::string& w : words) {
    auto it = cache.find(w);
    if (it == cache.end()) it = cache.emplace(w, segment(w)).first;
    out.insert(out.end(), it->second.begin(), it->second.end());
  }
  return out;
}

std::string BpeModel::to_text() const {
  std::string s;
  for (const auto& m : merges_) {
    s += m.left;
    s += ' ';
    s += m.right;
    s += '\n';
  }
  return s;
}

BpeModel BpeModel::from_text(std::string_view text) {
  std::vector<MergeRule> rules;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto parts = split_words(line);
    if (parts.size() != 2) {
      throw FormatError("merge file line " + std::to_string(lineno) + ": expected two symbols");
    }
    rules.push_back({parts[0], parts[1]});
  }
  return BpeModel(std::move(rules));
}

void BpeModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << to_text();
}

BpeModel BpeModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read merge file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

BpeModel learn_bpe(std::span<const std::string> words, std::size_t num_merges) {
  if (words.empty()) throw InputError("cannot learn BPE from an empty corpus");
  std::map<std::string, std::size_t> freq;
  for (const auto& w : words) ++freq[w];

  struct Entry {
    std::vector<std::string> symbols;
    std::size_t count;
  };
  std::vector<Entry> vocab;
  vocab.reserve(freq.size());
  for (const auto& [w, n] : freq) vocab.push_back({initial_symbols(w), n});

  std::vector<MergeRule> merges;
  while (merges.size() < num_merges) {
    std::map<std::pair<std::string, std::string>, std::size_t> pairs;
    for (const auto& e : vocab)
      for (std::size_t i = 0; i + 1 < e.symbols.size(); ++i) pairs[{e.symbols[i], e.symbols[i + 1]}] += e.count;
    // std::map iterates in lexicographic order, so the first maximum wins ties.
    const std::pair<std::string, std::string>* best = nullptr;
    std::size_t best_count = 0;
    for (const auto& [p, n] : pairs) {
      if (n > best_count) {
        best = &p;
        best_count = n;
      }
    }
    if (!best || best_count < 2) break;
    const MergeRule rule{best->first, best->second};
    for (auto& e : vocab) merge_pair(e.symbols, rule.left, rule.right);
    merges.push_back(rule);
  }
  return BpeModel(std::move(merges));
}

std::vector<std::string> split_words(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.emplace_back(line.substr(start, i - start));
  }
  return out;
}

std::vector<std::string> split_characters(std::string_view word) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < word.size()) {
    const auto lead = static_cast<unsigned char>(word[i]);
    std::size_t len = 1;
    if (lead >= 0xF0) {
      len = 4;
    } else if (lead >= 0xE0) {
      len = 3;
    } else if (lead >= 0xC0) {
      len = 2;
    }
    len = std::min(len, word.size() - i);
    out.emplace_back(word.substr(i, len));
    i += len;
  }
  return out;
}

std::vector<std::string> merge_subwords(std::span<const std::string> subwords) {
  std::vector<std::string> words;
  std::string current;
  for (const auto& s : subwords) {
    if (s.size() >= kEndOfWord.size() && s.compare(s.size() - kEndOfWord.size(), kEndOfWord.size(), kEndOfWord) == 0) {
      current.append(s, 0, s.size() - kEndOfWord.size());
      words.push_back(std::move(current));
      current.clear();
    } else {
      current += s;
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

std::string join(std::span<const std::string> tokens, std::string_view sep) {
  std::string s;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) s += sep;
    s += tokens[i];
  }
  return s;
}

}  // namespace xdv

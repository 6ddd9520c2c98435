// SPDX-License-Identifier: Apache-2.0
#include "xdv/vocabulary.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "xdv/error.hpp"

namespace xdv {

Vocabulary::Vocabulary()
    : Vocabulary(std::vector<std::string>{std::string(kPadSymbol), std::string(kUnkSymbol), std::string(kEosSymbol)}) {}

Vocabulary::Vocabulary(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  if (symbols_.size() < 3 || symbols_[kPad] != kPadSymbol || symbols_[kUnk] != kUnkSymbol ||
      symbols_[kEos] != kEosSymbol) {
    throw InputError("vocabulary must start with the reserved symbols <pad> <unk> </s>");
  }
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (!ids_.emplace(symbols_[i], static_cast<int>(i)).second) {
      throw InputError("duplicate vocabulary symbol '" + symbols_[i] + "'");
    }
  }
}

Vocabulary Vocabulary::build(std::span<const std::vector<std::string>> sentences, std::size_t limit) {
  if (limit < 3) throw InputError("vocabulary limit must leave room for the reserved symbols");
  std::map<std::string, std::size_t> counts;
  for (const auto& s : sentences)
    for (const auto& sym : s) ++counts[sym];
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> symbols{std::string(kPadSymbol), std::string(kUnkSymbol), std::string(kEosSymbol)};
  for (auto& [sym, n] : ranked) {
    if (symbols.size() >= limit) break;
    if (sym == kPadSymbol || sym == kUnkSymbol || sym == kEosSymbol) continue;
    symbols.push_back(std::move(sym));
  }
  return Vocabulary(std::move(symbols));
}

int Vocabulary::id_of(std::string_view symbol) const {
  auto it = ids_.find(std::string(symbol));
  return it == ids_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view symbol) const { return ids_.count(std::string(symbol)) != 0; }

const std::string& Vocabulary::symbol_of(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= symbols_.size()) {
    throw InputError("token id " + std::to_string(id) + " outside vocabulary of " + std::to_string(size()));
  }
  return symbols_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(std::span<const std::string> subwords) const {
  std::vector<int> ids;
  ids.reserve(subwords.size() + 1);
  for (const auto& s : subwords) ids.push_back(id_of(s));
  ids.push_back(kEos);
  return ids;
}

std::vector<std::string> Vocabulary::decode(std::span<const int> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int id : ids) {
    const std::string& s = symbol_of(id);
    if (id == kPad || id == kEos) continue;
    out.push_back(s);
  }
  return out;
}

std::string Vocabulary::to_text() const {
  std::string s;
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    s += symbols_[i];
    s += '\t';
    s += std::to_string(i);
    s += '\n';
  }
  return s;
}

Vocabulary Vocabulary::from_text(std::string_view text) {
  std::vector<std::string> symbols;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) {
      throw FormatError("vocabulary line " + std::to_string(symbols.size() + 1) + ": missing TAB");
    }
    int id = -1;
    const char* first = line.data() + tab + 1;
    const char* last = line.data() + line.size();
    if (std::from_chars(first, last, id).ptr != last || id != static_cast<int>(symbols.size())) {
      throw FormatError("vocabulary line " + std::to_string(symbols.size() + 1) + ": ids must be 0, 1, 2, ...");
    }
    symbols.push_back(line.substr(0, tab));
  }
  return Vocabulary(std::move(symbols));
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << to_text();
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read vocabulary file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

}  // namespace xdv

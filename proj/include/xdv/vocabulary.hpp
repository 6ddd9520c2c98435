// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace xdv {

/// Subword symbol <-> integer id map with three reserved entries.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kEos = 2;
  static constexpr std::string_view kPadSymbol = "<pad>";
  static constexpr std::string_view kUnkSymbol = "<unk>";
  static constexpr std::string_view kEosSymbol = "</s>";

  /// Reserved entries only.
  Vocabulary();
  /// Symbols in id order, reserved ones first. Throws InputError if the map is not a bijection.
  explicit Vocabulary(std::vector<std::string> symbols);

  /// Most frequent symbols first (ties by symbol), at most `limit` entries including the reserved ones.
  static Vocabulary build(std::span<const std::vector<std::string>> sentences, std::size_t limit);

  std::size_t size() const { return symbols_.size(); }
  int id_of(std::string_view symbol) const;
  /// Throws InputError when `id` is out of range.
  const std::string& symbol_of(int id) const;
  bool contains(std::string_view symbol) const;

  /// Ids of `subwords` followed by the end-of-sentence id.
  std::vector<int> encode(std::span<const std::string> subwords) const;
  /// Symbols of `ids`, skipping padding and end-of-sentence ids.
  std::vector<std::string> decode(std::span<const int> ids) const;

  /// "symbol\tid" per line in id order.
  std::string to_text() const;
  static Vocabulary from_text(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> ids_;
};

}  // namespace xdv

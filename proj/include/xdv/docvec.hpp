// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xdv/nmt.hpp"
#include "xdv/pipeline.hpp"
#include "xdv/shared.hpp"

// Document vectors from trained models: forward passes only.
namespace xdv {

enum class Composition { sum_a, sum_b, con_a, con_b, a_concat_b, a_plus_b, con_both };

const char* composition_name(Composition c);
/// Throws InputError for an unknown name.
Composition parse_composition(const std::string& name);
bool needs_path(Composition c, Lang l);

struct ComposeOptions {
  bool con_both_concat = false;  // con_both as [con_a, con_b] (2 r d_h) instead of con_a + con_b
};

std::size_t composition_dim(Composition c, std::size_t d_h, std::size_t r, const ComposeOptions& options = {});

enum class EmbedMode { direct_only, translator_combined };
const char* mode_name(EmbedMode m);
EmbedMode parse_mode(const std::string& name);

struct PathMeta {
  Lang language = Lang::a;  // language the document was written in
  bool encoder_a = false;
  bool encoder_b = false;
  bool translated = false;
  std::size_t translated_tokens = 0;
  bool truncated = false;  // some translated sentence hit the length cap
};

struct DocVector {
  Composition variant = Composition::sum_a;
  std::vector<double> values;
  PathMeta path;
  std::size_t dim() const { return values.size(); }
};

/// P of `ids` through `encoder` (the encoder reading language `lang`) and the shared stack.
/// InputError on an empty document.
Tensor embed_direct(const NmtModel& encoder, const SharedStack& stack, Lang lang, std::span<const int> ids);

/// Output cap for greedy translation of an n-id sentence.
inline std::size_t translation_cap(std::size_t n) { return 2 * n + 10; }

/// Translates each sentence of a language-`source` document with `translator`,
/// joins the outputs into one sequence and embeds it on the other path.
/// InputError naming `doc_name` when the translation comes out empty.
Tensor embed_via_translator(const NmtModel& translator, const NmtModel& target_encoder, const SharedStack& stack,
                            Lang source, std::span<const std::vector<int>> sentences, std::string_view doc_name,
                            PathMeta* meta = nullptr);

/// Sentence-wise greedy translation of a language-`source` document into
/// text of the other language.
std::string translate_document(const Pipeline& pipeline, const NmtModel& translator, Lang source,
                               std::string_view text, std::string_view sentence_end = ".");

/// ContractError naming the variant when a matrix it needs is null.
DocVector compose(const Tensor* P_a, const Tensor* P_b, Composition variant, const ComposeOptions& options = {});

/// Everything needed to embed raw text. `ab` encodes language a, `ba` language b.
struct DocEmbedder {
  const Pipeline& pipeline;
  const NmtModel& ab;
  const NmtModel& ba;
  const SharedStack& stack;
  std::string sentence_end = ".";  // splits documents for translation only
  ComposeOptions options;

  const NmtModel& encoder(Lang l) const { return l == Lang::a ? ab : ba; }
};

/// ContractError when `mode` cannot produce `variant` for a language-`lang` document.
void check_mode(Composition variant, Lang lang, EmbedMode mode);

/// One vector for a whole document read as a single sequence.
/// direct_only runs just the document's own encoder; asking it for a variant
/// that needs the other path is a ContractError.
DocVector embed_document(const DocEmbedder& embedder, Lang lang, std::string_view text, Composition variant,
                         EmbedMode mode, std::string_view doc_name = "document");
/// Several variants of one document, each path computed once.
std::vector<DocVector> embed_document(const DocEmbedder& embedder, Lang lang, std::string_view text,
                                      std::span<const Composition> variants, EmbedMode mode,
                                      std::string_view doc_name = "document");

/// Whitespace tokens grouped into sentences, each ending at `end` (kept);
/// trailing tokens form a last sentence.
std::vector<std::string> split_sentences(std::string_view text, std::string_view end);

struct NamedVector {
  std::string id;
  Composition variant = Composition::sum_a;
  std::vector<double> values;
};

/// "id TAB variant TAB dim TAB values", values printed with %.17g.
void write_vectors(const std::filesystem::path& path, std::span<const NamedVector> vectors);
std::vector<NamedVector> read_vectors(const std::filesystem::path& path);
/// Magic "XDVV", u64 count, then per vector: id, variant name, tensor block.
void write_vectors_binary(const std::filesystem::path& path, std::span<const NamedVector> vectors);
std::vector<NamedVector> read_vectors_binary(const std::filesystem::path& path);

}  // namespace xdv

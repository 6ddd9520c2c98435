// SPDX-License-Identifier: Apache-2.0
#include "xdv/docvec.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <utility>

#include "xdv/bpe.hpp"
#include "xdv/error.hpp"
#include "xdv/serialize.hpp"
#include "xdv/vocabulary.hpp"

namespace xdv {
namespace {

constexpr std::array<const char*, 7> kCompositionNames = {"sum_a",      "sum_b",    "con_a",   "con_b",
                                                          "a_concat_b", "a_plus_b", "con_both"};
constexpr std::string_view kVectorMagic = "XDVV";

std::vector<double> row_sum(const Tensor& P) {
  std::vector<double> out(P.cols(), 0.0);
  for (std::size_t i = 0; i < P.rows(); ++i)
    for (std::size_t k = 0; k < P.cols(); ++k) out[k] += P.at(i, k);
  return out;
}

std::vector<double> flat(const Tensor& P) { return {P.data().begin(), P.data().end()}; }

void append(std::vector<double>& dst, const std::vector<double>& src) { dst.insert(dst.end(), src.begin(), src.end()); }

std::vector<double> elementwise_sum(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = x[k] + y[k];
  return out;
}

}  // namespace

const char* composition_name(Composition c) { return kCompositionNames[static_cast<std::size_t>(c)]; }

Composition parse_composition(const std::string& name) {
  for (std::size_t i = 0; i < kCompositionNames.size(); ++i)
    if (name == kCompositionNames[i]) return static_cast<Composition>(i);
  throw InputError("unknown document vector variant '" + name + "'");
}

bool needs_path(Composition c, Lang l) {
  switch (c) {
    case Composition::sum_a:
    case Composition::con_a:
      return l == Lang::a;
    case Composition::sum_b:
    case Composition::con_b:
      return l == Lang::b;
    default:
      return true;
  }
}

std::size_t composition_dim(Composition c, std::size_t d_h, std::size_t r, const ComposeOptions& options) {
  switch (c) {
    case Composition::sum_a:
    case Composition::sum_b:
    case Composition::a_plus_b:
      return d_h;
    case Composition::a_concat_b:
      return 2 * d_h;
    case Composition::con_a:
    case Composition::con_b:
      return r * d_h;
    case Composition::con_both:
      return options.con_both_concat ? 2 * r * d_h : r * d_h;
  }
  return 0;
}

const char* mode_name(EmbedMode m) { return m == EmbedMode::direct_only ? "direct_only" : "translator_combined"; }

EmbedMode parse_mode(const std::string& name) {
  if (name == "direct_only") return EmbedMode::direct_only;
  if (name == "translator_combined") return EmbedMode::translator_combined;
  throw InputError("unknown embedding mode '" + name + "' (direct_only or translator_combined)");
}

Tensor embed_direct(const NmtModel& encoder, const SharedStack& stack, Lang lang, std::span<const int> ids) {
  if (ids.empty()) throw InputError("cannot embed an empty document");
  Tape tape(Tape::Mode::inference);
  return shared_encode(tape, stack, lang, encode(tape, encoder, ids)).value();
}

Tensor embed_via_translator(const NmtModel& translator, const NmtModel& target_encoder, const SharedStack& stack,
                            Lang source, std::span<const std::vector<int>> sentences, std::string_view doc_name,
                            PathMeta* meta) {
  std::vector<int> joined;
  bool truncated = false;
  for (const auto& s : sentences) {
    if (s.empty()) continue;
    const Translation t = translate(translator, s, translation_cap(s.size()));
    joined.insert(joined.end(), t.ids.begin(), t.ids.end());
    truncated = truncated || t.truncated;
  }
  if (joined.empty()) {
    throw InputError("translation of " + std::string(doc_name) + " from language " + lang_name(source) +
                     " came out empty");
  }
  joined.push_back(Vocabulary::kEos);
  if (meta) {
    meta->translated = true;
    meta->translated_tokens = joined.size() - 1;
    meta->truncated = truncated;
  }
  return embed_direct(target_encoder, stack, other(source), joined);
}

std::string translate_document(const Pipeline& pipeline, const NmtModel& translator, Lang source,
                               std::string_view text, std::string_view sentence_end) {
  std::vector<std::string> out;
  for (const std::string& sentence : split_sentences(text, sentence_end)) {
    const std::vector<int> ids = pipeline.encode(source, sentence);
    const Translation t = translate(translator, ids, translation_cap(ids.size()));
    if (!t.ids.empty()) out.push_back(pipeline.decode(other(source), t.ids));
  }
  return join(out);
}

DocVector compose(const Tensor* P_a, const Tensor* P_b, Composition variant, const ComposeOptions& options) {
  if ((needs_path(variant, Lang::a) && !P_a) || (needs_path(variant, Lang::b) && !P_b)) {
    throw ContractError(std::string("variant ") + composition_name(variant) + " needs the context matrix of " +
                        (needs_path(variant, Lang::a) && !P_a ? "language a" : "language b"));
  }
  DocVector out;
  out.variant = variant;
  switch (variant) {
    case Composition::sum_a:
      out.values = row_sum(*P_a);
      break;
    case Composition::sum_b:
      out.values = row_sum(*P_b);
      break;
    case Composition::con_a:
      out.values = flat(*P_a);
      break;
    case Composition::con_b:
      out.values = flat(*P_b);
      break;
    case Composition::a_concat_b:
      out.values = row_sum(*P_a);
      append(out.values, row_sum(*P_b));
      break;
    case Composition::a_plus_b:
      out.values = elementwise_sum(row_sum(*P_a), row_sum(*P_b));
      break;
    case Composition::con_both:
      if (options.con_both_concat) {
        out.values = flat(*P_a);
        append(out.values, flat(*P_b));
      } else {
        out.values = elementwise_sum(flat(*P_a), flat(*P_b));
      }
      break;
  }
  return out;
}

std::vector<std::string> split_sentences(std::string_view text, std::string_view end) {
  std::vector<std::string> out;
  std::string current;
  for (const std::string& w : split_words(text)) {
    if (!current.empty()) current += ' ';
    current += w;
    if (w == end) out.push_back(std::exchange(current, {}));
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

void check_mode(Composition variant, Lang lang, EmbedMode mode) {
  if (mode == EmbedMode::direct_only && needs_path(variant, other(lang))) {
    throw ContractError(std::string("variant ") + composition_name(variant) + " needs the language " +
                        lang_name(other(lang)) + " path, which direct_only mode cannot produce for a language " +
                        lang_name(lang) + " document");
  }
}

std::vector<DocVector> embed_document(const DocEmbedder& embedder, Lang lang, std::string_view text,
                                      std::span<const Composition> variants, EmbedMode mode,
                                      std::string_view doc_name) {
  if (split_words(text).empty()) throw InputError(std::string(doc_name) + " is empty");
  const Lang far = other(lang);
  bool want_own = false, want_far = false;
  for (Composition variant : variants) {
    check_mode(variant, lang, mode);
    want_own = want_own || needs_path(variant, lang);
    want_far = want_far || needs_path(variant, far);
  }
  PathMeta meta;
  meta.language = lang;
  Tensor own, translated;
  const Tensor* P[2] = {nullptr, nullptr};
  if (want_own) {
    own = embed_direct(embedder.encoder(lang), embedder.stack, lang, embedder.pipeline.encode(lang, text));
    P[static_cast<int>(lang)] = &own;
  }
  if (want_far) {
    std::vector<std::vector<int>> sentences;
    for (const std::string& s : split_sentences(text, embedder.sentence_end))
      sentences.push_back(embedder.pipeline.encode(lang, s));
    translated = embed_via_translator(embedder.encoder(lang), embedder.encoder(far), embedder.stack, lang, sentences,
                                      doc_name, &meta);
    P[static_cast<int>(far)] = &translated;
  }
  std::vector<DocVector> out;
  for (Composition variant : variants) {
    const Tensor* pa = needs_path(variant, Lang::a) ? P[0] : nullptr;
    const Tensor* pb = needs_path(variant, Lang::b) ? P[1] : nullptr;
    out.push_back(compose(pa, pb, variant, embedder.options));
    out.back().path = meta;
    out.back().path.encoder_a = pa != nullptr;
    out.back().path.encoder_b = pb != nullptr;
    if (!needs_path(variant, far)) {
      out.back().path.translated = false;
      out.back().path.translated_tokens = 0;
      out.back().path.truncated = false;
    }
  }
  return out;
}

DocVector embed_document(const DocEmbedder& embedder, Lang lang, std::string_view text, Composition variant,
                         EmbedMode mode, std::string_view doc_name) {
  return std::move(embed_document(embedder, lang, text, std::span<const Composition>(&variant, 1), mode, doc_name)[0]);
}

void write_vectors(const std::filesystem::path& path, std::span<const NamedVector> vectors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  char buf[32];
  for (const NamedVector& v : vectors) {
    out << v.id << '\t' << composition_name(v.variant) << '\t' << v.values.size() << '\t';
    for (std::size_t k = 0; k < v.values.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", v.values[k]);
      if (k) out << ' ';
      out << buf;
    }
    out << '\n';
  }
}

std::vector<NamedVector> read_vectors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  std::vector<NamedVector> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto where = path.string() + ":" + std::to_string(lineno);
    std::istringstream fields(line);
    std::string id, variant, dim_text, values;
    if (!std::getline(fields, id, '\t') || !std::getline(fields, variant, '\t') ||
        !std::getline(fields, dim_text, '\t')) {
      throw FormatError(where + ": expected id, variant, dimension and values");
    }
    std::getline(fields, values);
    NamedVector v;
    v.id = id;
    try {
      v.variant = parse_composition(variant);
    } catch (const InputError& e) {
      throw FormatError(where + ": " + e.what());
    }
    std::size_t dim = 0;
    try {
      dim = std::stoul(dim_text);
    } catch (const std::exception&) {
      throw FormatError(where + ": bad dimension '" + dim_text + "'");
    }
    std::istringstream nums(values);
    double x;
    while (nums >> x) v.values.push_back(x);
    if (!nums.eof() || v.values.size() != dim) {
      throw FormatError(where + ": declared dimension " + std::to_string(dim) + ", read " +
                        std::to_string(v.values.size()) + " values");
    }
    out.push_back(std::move(v));
  }
  return out;
}

void write_vectors_binary(const std::filesystem::path& path, std::span<const NamedVector> vectors) {
  ByteWriter w;
  w.bytes(kVectorMagic);
  w.u64(vectors.size());
  for (const NamedVector& v : vectors) {
    w.str(v.id);
    w.str(composition_name(v.variant));
    write_tensor(w, Tensor::vector(v.values));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
}

std::vector<NamedVector> read_vectors_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ByteReader r(data);
  if (r.bytes(kVectorMagic.size(), "vector file magic") != kVectorMagic) {
    throw FormatError(path.string() + " is not a binary vector file");
  }
  const std::uint64_t count = r.u64("vector count");
  std::vector<NamedVector> out;
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedVector v;
    v.id = r.str("vector id");
    const std::string variant = r.str("vector variant");
    try {
      v.variant = parse_composition(variant);
    } catch (const InputError& e) {
      throw FormatError(path.string() + ": " + e.what());
    }
    const Tensor t = read_tensor(r);
    v.values.assign(t.data().begin(), t.data().end());
    out.push_back(std::move(v));
  }
  if (r.remaining() != 0) throw FormatError(path.string() + ": trailing bytes after " + std::to_string(count) + " vectors");
  return out;
}

}  // namespace xdv

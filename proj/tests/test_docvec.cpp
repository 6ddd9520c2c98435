// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "xdv/config.hpp"
#include "xdv/digest.hpp"
#include "xdv/docvec.hpp"
#include "xdv/error.hpp"
#include "xdv/training.hpp"

using namespace xdv;

namespace {

bool bitwise_equal(std::span<const double> x, std::span<const double> y) {
  return x.size() == y.size() && std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) == 0;
}

Tensor random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Tensor t({rows, cols});
  for (double& x : t.data()) x = rng.uniform(-2, 2);
  return t;
}

const ParallelText& toy_text() {
  static const ParallelText text{
      {"bado kimu .", "lena poti sa .", "bado lena .", "kimu poti rase ."},
      {"cafo hiwu .", "jequ vizo xa .", "cafo jequ .", "hiwu vizo waxe ."}};
  return text;
}

struct World {
  Pipeline pipeline;
  NmtModel ab;
  NmtModel ba;
  SharedStack stack;
};

World make_world(std::uint64_t seed) {
  Pipeline p = Pipeline::learn(toy_text(), {10, 100, false});
  const std::size_t va = p.vocab(Lang::a).size(), vb = p.vocab(Lang::b).size();
  World w{p, NmtModel::initialized({va, vb, 8, 8, 8}, seed), NmtModel::initialized({vb, va, 8, 8, 8}, seed + 1),
          SharedStack::initialized({Variant::gru_sattn, 6, 3, 16}, seed + 2)};
  Rng rng(seed + 3);
  for (auto& t : w.stack.parameters())
    for (double& x : t.tensor->data()) x = rng.uniform(-0.4, 0.4);
  return w;
}

std::string long_document(std::size_t words) {
  const char* pool[] = {"bado", "kimu", "lena", "poti", "sa", "rase", "."};
  std::string s;
  for (std::size_t i = 0; i < words; ++i) s += std::string(i ? " " : "") + pool[(i * 5 + 3) % 7];
  return s;
}

}  // namespace

TEST(Composition, NamesRoundTrip) {
  for (int i = 0; i < 7; ++i) {
    const auto c = static_cast<Composition>(i);
    EXPECT_EQ(parse_composition(composition_name(c)), c);
  }
  EXPECT_THROW(parse_composition("sum"), InputError);
  EXPECT_EQ(parse_mode("direct_only"), EmbedMode::direct_only);
  EXPECT_THROW(parse_mode("direct-only-ish"), InputError);
}

TEST(Composition, PaperProfileDimensionTable) {
  const RunConfig g = make_profile("paper", Variant::gru_sattn);
  auto dim = [&](Composition c, const RunConfig& rc) { return composition_dim(c, rc.d_h, rc.r, rc.compose); };
  EXPECT_EQ(dim(Composition::sum_a, g), 1024u);
  EXPECT_EQ(dim(Composition::sum_b, g), 1024u);
  EXPECT_EQ(dim(Composition::a_plus_b, g), 1024u);
  EXPECT_EQ(dim(Composition::a_concat_b, g), 2048u);
  EXPECT_EQ(dim(Composition::con_a, g), 4096u);
  EXPECT_EQ(dim(Composition::con_both, g), 4096u);
  const RunConfig s = make_profile("paper", Variant::stacked_sattn);
  EXPECT_EQ(dim(Composition::sum_a, s), 500u);
  EXPECT_EQ(dim(Composition::a_plus_b, s), 500u);
}

TEST(Composition, DeskProfileFollowsFormulas) {
  for (Variant v : {Variant::gru_sattn, Variant::stacked_sattn}) {
    const RunConfig c = make_profile("desk", v);
    const std::size_t d = c.d_h, r = c.r;
    EXPECT_EQ(composition_dim(Composition::sum_b, d, r), d);
    EXPECT_EQ(composition_dim(Composition::a_concat_b, d, r), 2 * d);
    EXPECT_EQ(composition_dim(Composition::con_b, d, r), r * d);
    EXPECT_EQ(composition_dim(Composition::con_both, d, r), r * d);
    EXPECT_EQ(composition_dim(Composition::con_both, d, r, {true}), 2 * r * d);
  }
}

TEST(Composition, HandLaidOutFixture) {
  const Tensor Pa = Tensor::from_rows({{1, 2, 3}, {4, 5, 6}});
  const Tensor Pb = Tensor::from_rows({{-1, 0.5, 2}, {3, -4, 0.25}});
  EXPECT_EQ(compose(&Pa, nullptr, Composition::con_a).values, (std::vector<double>{1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(compose(nullptr, &Pb, Composition::con_b).values, (std::vector<double>{-1, 0.5, 2, 3, -4, 0.25}));
  EXPECT_EQ(compose(&Pa, nullptr, Composition::sum_a).values, (std::vector<double>{5, 7, 9}));
  EXPECT_EQ(compose(&Pa, &Pb, Composition::a_concat_b).values, (std::vector<double>{5, 7, 9, 2, -3.5, 2.25}));
  EXPECT_EQ(compose(&Pa, &Pb, Composition::a_plus_b).values, (std::vector<double>{7, 3.5, 11.25}));
  EXPECT_EQ(compose(&Pa, &Pb, Composition::con_both).values, (std::vector<double>{0, 2.5, 5, 7, 1, 6.25}));
  EXPECT_EQ(compose(&Pa, &Pb, Composition::con_both, {true}).values,
            (std::vector<double>{1, 2, 3, 4, 5, 6, -1, 0.5, 2, 3, -4, 0.25}));
}

TEST(Composition, MissingMatrixNamesVariant) {
  const Tensor P = Tensor::from_rows({{1, 2}});
  try {
    compose(&P, nullptr, Composition::a_plus_b);
    FAIL();
  } catch (const ContractError& e) {
    EXPECT_NE(std::string(e.what()).find("a_plus_b"), std::string::npos);
  }
  EXPECT_THROW(compose(nullptr, &P, Composition::sum_a), ContractError);
  EXPECT_NO_THROW(compose(nullptr, &P, Composition::sum_b));
}

TEST(Composition, SumOfSumsIsExactForRandomMatrices) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t r = 1 + rng.index(8), d = 1 + rng.index(40);
    const Tensor Pa = random_matrix(rng, r, d), Pb = random_matrix(rng, r, d);
    const auto sa = compose(&Pa, nullptr, Composition::sum_a).values;
    const auto sb = compose(nullptr, &Pb, Composition::sum_b).values;
    std::vector<double> expect(d);
    for (std::size_t k = 0; k < d; ++k) expect[k] = sa[k] + sb[k];
    EXPECT_TRUE(bitwise_equal(compose(&Pa, &Pb, Composition::a_plus_b).values, expect));
  }
}

TEST(EmbedDirect, ShapeDeterminismAndTrainingPathEquality) {
  World w = make_world(20);
  const auto ids = w.pipeline.encode(Lang::a, long_document(30));
  const Tensor P = embed_direct(w.ab, w.stack, Lang::a, ids);
  EXPECT_EQ(P.rows(), 3u);
  EXPECT_EQ(P.cols(), 6u);
  EXPECT_TRUE(bitwise_equal(P.data(), embed_direct(w.ab, w.stack, Lang::a, ids).data()));
  Tape train;
  w.stack.set_trainable(true);
  const Var Pt = shared_encode(train, w.stack, Lang::a, encode(train, w.ab, ids));
  EXPECT_TRUE(bitwise_equal(P.data(), Pt.value().data()));
  EXPECT_THROW(embed_direct(w.ab, w.stack, Lang::a, std::vector<int>{}), InputError);
}

TEST(EmbedDirect, LongDocumentsStayFinite) {
  World w = make_world(21);
  for (std::size_t words : {1u, 50u, 200u, 500u, 1000u}) {
    const Tensor P = embed_direct(w.ba, w.stack, Lang::b, w.pipeline.encode(Lang::b, long_document(words)));
    EXPECT_EQ(P.rows(), 3u);
    EXPECT_EQ(P.cols(), 6u);
    EXPECT_TRUE(P.all_finite()) << words;
  }
}

TEST(EmbedDocument, ModesAndPathMetadata) {
  World w = make_world(30);
  const DocEmbedder e{w.pipeline, w.ab, w.ba, w.stack};
  const std::string doc = "bado kimu . lena poti sa .";

  const DocVector direct = embed_document(e, Lang::a, doc, Composition::sum_a, EmbedMode::direct_only);
  EXPECT_EQ(direct.dim(), 6u);
  EXPECT_TRUE(direct.path.encoder_a);
  EXPECT_FALSE(direct.path.encoder_b);
  EXPECT_FALSE(direct.path.translated);
  const Tensor P = embed_direct(w.ab, w.stack, Lang::a, w.pipeline.encode(Lang::a, doc));
  EXPECT_EQ(direct.values, compose(&P, nullptr, Composition::sum_a).values);

  EXPECT_THROW(embed_document(e, Lang::a, doc, Composition::a_plus_b, EmbedMode::direct_only), ContractError);
  EXPECT_THROW(embed_document(e, Lang::a, doc, Composition::sum_b, EmbedMode::direct_only), ContractError);
  EXPECT_THROW(embed_document(e, Lang::a, "  ", Composition::sum_a, EmbedMode::direct_only), InputError);

  w.ab.b_out[3] = 50.0;  // the untrained translator repeats one token up to its length cap
  const DocVector both = embed_document(e, Lang::a, doc, Composition::con_both, EmbedMode::translator_combined);
  EXPECT_EQ(both.dim(), 18u);
  EXPECT_TRUE(both.path.encoder_a && both.path.encoder_b && both.path.translated);
  EXPECT_TRUE(both.path.truncated);
  EXPECT_GT(both.path.translated_tokens, 0u);
}

TEST(EmbedDocument, ManyVariantsMatchOneAtATime) {
  World w = make_world(32);
  w.ab.b_out[3] = 50.0;
  const DocEmbedder e{w.pipeline, w.ab, w.ba, w.stack};
  const std::string doc = "kimu lena . sa bado .";
  const std::vector<Composition> all{Composition::sum_a,      Composition::sum_b,    Composition::con_a,
                                     Composition::con_b,      Composition::a_concat_b, Composition::a_plus_b,
                                     Composition::con_both};
  const auto many = embed_document(e, Lang::a, doc, all, EmbedMode::translator_combined);
  ASSERT_EQ(many.size(), all.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    const DocVector one = embed_document(e, Lang::a, doc, all[i], EmbedMode::translator_combined);
    EXPECT_TRUE(bitwise_equal(many[i].values, one.values)) << composition_name(all[i]);
    EXPECT_EQ(many[i].path.translated, one.path.translated) << composition_name(all[i]);
    EXPECT_EQ(many[i].path.encoder_a, one.path.encoder_a);
    EXPECT_EQ(many[i].path.encoder_b, one.path.encoder_b);
  }
}

TEST(EmbedDocument, DoesNotTouchParameters) {
  World w = make_world(31);
  auto snapshot = [&] {
    std::vector<std::string> d;
    for (auto* m : {&w.ab, &w.ba})
      for (const auto& p : m->parameters()) d.push_back(tensor_digest(*p.tensor));
    for (const auto& p : w.stack.parameters()) d.push_back(tensor_digest(*p.tensor));
    return d;
  };
  const auto before = snapshot();
  const DocEmbedder e{w.pipeline, w.ab, w.ba, w.stack};
  w.ba.b_out[3] = 50.0;
  const auto before_with_bias = snapshot();
  embed_document(e, Lang::b, "cafo hiwu . jequ .", Composition::a_concat_b, EmbedMode::translator_combined);
  EXPECT_EQ(snapshot(), before_with_bias);
  EXPECT_NE(before, before_with_bias);
}

TEST(EmbedViaTranslator, MemorizedTranslatorMatchesGoldPath) {
  World w = make_world(40);
  w.ba = NmtModel::initialized({w.pipeline.vocab(Lang::b).size(), w.pipeline.vocab(Lang::a).size(), 16, 16, 16}, 41);
  const ParallelCorpus corpus = encode_parallel(w.pipeline, toy_text(), 0);
  NmtTrainConfig cfg;
  cfg.epochs = 150;
  cfg.batch = 2;
  cfg.alpha = 0.01;
  train_nmt_direction(w.ba, corpus.b, corpus.a, cfg);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const std::vector<int> gold(corpus.a[i].begin(), corpus.a[i].end() - 1);
    ASSERT_EQ(translate(w.ba, corpus.b[i], 20).ids, gold) << i;
    PathMeta meta;
    const std::vector<std::vector<int>> sentences{corpus.b[i]};
    const Tensor via = embed_via_translator(w.ba, w.ab, w.stack, Lang::b, sentences, "doc", &meta);
    EXPECT_TRUE(bitwise_equal(via.data(), embed_direct(w.ab, w.stack, Lang::a, corpus.a[i]).data()));
    EXPECT_TRUE(meta.translated);
    EXPECT_EQ(meta.translated_tokens, gold.size());
  }
  EXPECT_EQ(translate_document(w.pipeline, w.ba, Lang::b, toy_text().b[1] + " " + toy_text().b[3]),
            toy_text().a[1] + " " + toy_text().a[3]);
}

TEST(EmbedViaTranslator, EmptyTranslationNamesDocument) {
  World w = make_world(45);
  for (double& x : w.ba.b_out.data()) x = 0.0;
  w.ba.b_out[Vocabulary::kEos] = 1e6;  // the decoder stops at once
  const std::vector<std::vector<int>> sentences{w.pipeline.encode(Lang::b, "cafo hiwu .")};
  try {
    embed_via_translator(w.ba, w.ab, w.stack, Lang::b, sentences, "doc-17");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("doc-17"), std::string::npos);
  }
}

TEST(SplitSentences, KeepsTerminatorsAndTail) {
  EXPECT_EQ(split_sentences("a b . c . d", "."), (std::vector<std::string>{"a b .", "c .", "d"}));
  EXPECT_EQ(split_sentences("  ", "."), std::vector<std::string>{});
  EXPECT_EQ(split_sentences("x .", "."), std::vector<std::string>{"x ."});
}

TEST(VectorFiles, TextAndBinaryRoundTripsAreExact) {
  Rng rng(50);
  std::vector<NamedVector> vs;
  for (int i = 0; i < 5; ++i) {
    NamedVector v{"doc" + std::to_string(i), static_cast<Composition>(i % 7), {}};
    for (int k = 0; k < 7; ++k) v.values.push_back(rng.uniform(-1e3, 1e3) * std::pow(10.0, rng.uniform(-20, 20)));
    vs.push_back(v);
  }
  const auto dir = std::filesystem::temp_directory_path();
  write_vectors(dir / "xdv_vecs.tsv", vs);
  write_vectors_binary(dir / "xdv_vecs.bin", vs);
  for (const auto& back : {read_vectors(dir / "xdv_vecs.tsv"), read_vectors_binary(dir / "xdv_vecs.bin")}) {
    ASSERT_EQ(back.size(), vs.size());
    for (std::size_t i = 0; i < vs.size(); ++i) {
      EXPECT_EQ(back[i].id, vs[i].id);
      EXPECT_EQ(back[i].variant, vs[i].variant);
      EXPECT_TRUE(bitwise_equal(back[i].values, vs[i].values));
    }
  }
  std::ofstream(dir / "xdv_bad.tsv") << "doc\tsum_a\t3\t1 2\n";
  EXPECT_THROW(read_vectors(dir / "xdv_bad.tsv"), FormatError);
  std::ofstream(dir / "xdv_bad.tsv") << "doc\tsum_x\t1\t1\n";
  EXPECT_THROW(read_vectors(dir / "xdv_bad.tsv"), FormatError);
  EXPECT_THROW(read_vectors_binary(dir / "xdv_vecs.tsv"), FormatError);
  for (const char* f : {"xdv_vecs.tsv", "xdv_vecs.bin", "xdv_bad.tsv"}) std::filesystem::remove(dir / f);
}

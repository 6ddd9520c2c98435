// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "xdv/config.hpp"
#include "xdv/error.hpp"

using namespace xdv;

TEST(Profile, PaperSettings) {
  const RunConfig c = make_profile("paper", Variant::gru_sattn);
  EXPECT_EQ(c.d_h, 1024u);
  EXPECT_EQ(c.r, 4u);
  EXPECT_EQ(c.nmt_dims.emb, 500u);
  EXPECT_EQ(c.shared.loss.beta, 0.5);
  EXPECT_EQ(c.shared.loss.negatives, 20u);
  EXPECT_DOUBLE_EQ(c.shared.loss.margin_for(c.d_h), 2.0 * std::sqrt(1024.0));
  EXPECT_EQ(c.nmt.batch, 80u);
  EXPECT_EQ(c.shared.batch, 40u);
  EXPECT_EQ(c.nmt.epochs, 10u);
  EXPECT_EQ(c.shared.epochs, 10u);
  EXPECT_EQ(c.nmt.max_len, 50u);
  EXPECT_EQ(c.classifier.max_iter, 5000u);
  EXPECT_TRUE(c.classifier.balanced);

  const RunConfig s = make_profile("paper", Variant::stacked_sattn);
  EXPECT_EQ(s.d_h, 500u);
  EXPECT_EQ(s.r, 8u);
  EXPECT_EQ(s.shared.epochs, 5u);
}

TEST(Profile, DeskSettings) {
  const RunConfig c = make_profile("desk", Variant::gru_sattn);
  EXPECT_EQ(c.d_h, 32u);
  EXPECT_EQ(c.r, 4u);
  EXPECT_EQ(c.shared.epochs, 10u);
  EXPECT_EQ(c.synthetic.parallel, 2000u);
  EXPECT_EQ(c.synthetic.train_docs, 400u);
  EXPECT_EQ(c.synthetic.test_docs, 400u);
  EXPECT_THROW(make_profile("huge", Variant::gru_sattn), InputError);
}

TEST(Profile, SeedReachesEveryStage) {
  const RunConfig c = apply_ini(make_profile("desk", Variant::gru_sattn), "[run]\nseed = 42\nthreads = 3\n");
  EXPECT_EQ(c.nmt.seed, 42u);
  EXPECT_EQ(c.shared.seed, 42u);
  EXPECT_EQ(c.shared.threads, 3u);
}

TEST(Ini, ResolvedConfigRoundTrips) {
  RunConfig c = make_profile("desk", Variant::stacked_sattn);
  c.shared.alpha = 0.1 + 0.2;
  c.compose.con_both_concat = true;
  c.seed = 9;
  c.sync();
  const std::string text = to_ini(c);
  const RunConfig back = apply_ini(make_profile("paper", Variant::gru_sattn), text);
  EXPECT_EQ(to_ini(back), text);
  EXPECT_EQ(back.variant, Variant::stacked_sattn);
  EXPECT_EQ(back.shared.alpha, 0.1 + 0.2);
  EXPECT_TRUE(back.compose.con_both_concat);
}

TEST(Ini, PartialOverrideKeepsTheRest) {
  const RunConfig base = make_profile("desk", Variant::gru_sattn);
  const RunConfig c = apply_ini(base, "[shared]\nbeta = 1\n");
  EXPECT_EQ(c.shared.loss.beta, 1.0);
  EXPECT_EQ(c.d_h, base.d_h);
}

TEST(Ini, ErrorsNameTheKey) {
  const RunConfig base = make_profile("desk", Variant::gru_sattn);
  try {
    apply_ini(base, "[shared]\nbogus = 1\n", "x.ini");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("shared.bogus"), std::string::npos);
  }
  EXPECT_THROW(apply_ini(base, "[nmt]\nepochs = ten\n"), InputError);
  EXPECT_THROW(apply_ini(base, "[nmt]\nepochs = -1\n"), InputError);
  EXPECT_THROW(apply_ini(base, "[model]\nvariant = lstm\n"), InputError);
  EXPECT_THROW(apply_ini(base, "[eval]\nbalanced = maybe\n"), InputError);
  EXPECT_THROW(apply_ini_file(base, "/nonexistent/x.ini"), InputError);
}

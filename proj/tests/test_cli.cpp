// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "xdv/docvec.hpp"
#include "xdv/pipeline.hpp"
#include "xdv/training.hpp"

using namespace xdv;
namespace fs = std::filesystem;

namespace {

const fs::path kData = XDV_TEST_DATA;

struct Invocation {
  int code = -1;
  std::string output;  // stdout and stderr
};

Invocation run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path log = fs::temp_directory_path() / ("xdv_cli_log_" + std::to_string(counter++));
  const std::string cmd = std::string("\"") + XDV_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  Invocation r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  fs::remove(log);
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("xdv_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const std::string kSmall =
    "--seed 5 --set task.parallel=200 --set task.heldout=10 --set task.train_docs=12 --set task.test_docs=12 "
    "--set bpe.merges=60 --set nmt.epochs=1 --set shared.epochs=2 --set shared.batch=20 ";

std::size_t batch_count(std::size_t n, std::size_t batch) {
  std::vector<std::size_t> order(n);
  return make_batches(order, batch).size();
}

}  // namespace

TEST(CliBpe, LearnMatchesGoldenMerges) {
  const fs::path dir = scratch("bpe");
  const Invocation r = run_cli("learn-bpe --input \"" + (kData / "bpe_corpus.txt").string() + "\" --merges 40 --out \"" +
                    (dir / "m.merges").string() + "\"");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(slurp(dir / "m.merges"), slurp(kData / "bpe_corpus.merges"));
  EXPECT_TRUE(fs::exists(dir / "m.merges.ini"));
}

TEST(CliBpe, ApplyThenStripIsIdentity) {
  const fs::path dir = scratch("apply");
  const std::string corpus = (kData / "bpe_corpus.txt").string();
  ASSERT_EQ(run_cli("apply-bpe --bpe \"" + (kData / "bpe_corpus.merges").string() + "\" --input \"" + corpus +
                "\" --out \"" + (dir / "seg.txt").string() + "\"")
                .code,
            0);
  EXPECT_NE(slurp(dir / "seg.txt").find("</w>"), std::string::npos);
  ASSERT_EQ(run_cli("apply-bpe --strip --input \"" + (dir / "seg.txt").string() + "\" --out \"" +
                (dir / "back.txt").string() + "\"")
                .code,
            0);
  EXPECT_EQ(slurp(dir / "back.txt"), slurp(corpus));
}

TEST(CliExitCodes, UsageAndInputErrors) {
  const fs::path dir = scratch("codes");
  Invocation r = run_cli("learn-bpe --input \"" + (dir / "missing.txt").string() + "\" --out \"" + (dir / "x").string() + "\"");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("missing.txt"), std::string::npos);
  EXPECT_EQ(run_cli("apply-bpe --bpe nothing.merges --input nothing.txt --out x").code, 2);
  EXPECT_EQ(run_cli("no-such-command").code, 2);
  EXPECT_EQ(run_cli("").code, 2);
  EXPECT_EQ(run_cli("--profile huge make-task --out x").code, 2);
  EXPECT_EQ(run_cli("--set shared.bogus=1 make-task --out x").code, 2);
  EXPECT_EQ(run_cli("--help").code, 0);
}

TEST(CliConfig, PrintConfigAppliesLayersInOrder) {
  const fs::path dir = scratch("config");
  std::ofstream(dir / "c.ini") << "[run]\nprofile = paper\nseed = 3\n[shared]\nbeta = 0.25\n";
  const Invocation r = run_cli("--config \"" + (dir / "c.ini").string() + "\" --set shared.beta=0.75 --seed 4 --print-config");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("profile = paper"), std::string::npos);
  EXPECT_NE(r.output.find("d_h = 1024"), std::string::npos);
  EXPECT_NE(r.output.find("beta = 0.75"), std::string::npos);
  EXPECT_NE(r.output.find("seed = 4"), std::string::npos);
}

class CliPipeline : public ::testing::Test {
 protected:
  static fs::path root() { return fs::temp_directory_path() / "xdv_cli_pipeline"; }
  static fs::path task() { return root() / "task"; }
  static fs::path model() { return root() / "model"; }
  static std::string parallel() {
    return "--parallel \"" + (task() / "parallel.a.txt").string() + "\" \"" + (task() / "parallel.b.txt").string() +
           "\" ";
  }

  static void SetUpTestSuite() {
    fs::remove_all(root());
    fs::create_directories(root());
    ASSERT_EQ(run_cli(kSmall + "make-task --out \"" + task().string() + "\"").code, 0);
    Invocation r = run_cli(kSmall + "train-nmt " + parallel() + "--out \"" + model().string() + "\"");
    ASSERT_EQ(r.code, 0) << r.output;
    r = run_cli(kSmall + "train-shared " + parallel() + "--model \"" + model().string() + "\"");
    ASSERT_EQ(r.code, 0) << r.output;
  }
  static void TearDownTestSuite() { fs::remove_all(root()); }
};

TEST_F(CliPipeline, MetricsHaveOneLinePerBatch) {
  const Pipeline p = Pipeline::load(model() / "pipeline");
  const ParallelCorpus corpus = encode_parallel(
      p, read_parallel(task() / "parallel.a.txt", task() / "parallel.b.txt"), 50);
  auto lines = [](const fs::path& f) {
    const std::string s = slurp(f);
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
  };
  EXPECT_EQ(lines(model() / "metrics.nmt.tsv"), 2 * 1 * batch_count(corpus.size(), 20));
  EXPECT_EQ(lines(model() / "metrics.shared.tsv"), 2 * batch_count(corpus.size(), 20));
  EXPECT_TRUE(fs::exists(model() / "train-nmt.ini"));
  EXPECT_TRUE(fs::exists(model() / "train-shared.ini"));
}

TEST_F(CliPipeline, RerunGivesIdenticalCheckpoints) {
  const fs::path again = root() / "again";
  ASSERT_EQ(run_cli(kSmall + "train-nmt " + parallel() + "--out \"" + again.string() + "\"").code, 0);
  ASSERT_EQ(run_cli(kSmall + "train-shared " + parallel() + "--model \"" + again.string() + "\"").code, 0);
  for (const char* f : {"nmt.ab.ckpt", "nmt.ba.ckpt", "shared.ckpt", "metrics.shared.tsv"}) {
    EXPECT_EQ(slurp(model() / f), slurp(again / f)) << f;
  }
}

TEST_F(CliPipeline, StageTwoNeedsStageOne) {
  const Invocation r = run_cli(kSmall + "train-shared " + parallel() + "--model \"" + (root() / "empty").string() + "\"");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("train-nmt"), std::string::npos);
}

TEST_F(CliPipeline, SumOfSumFilesEqualsAPlusB) {
  const fs::path out = root() / "vec";
  const Invocation r = run_cli(kSmall + "embed --model \"" + model().string() + "\" --lang b --input \"" +
                    (task() / "test.b.tsv").string() +
                    "\" --variant sum_a --variant sum_b --variant a_plus_b --out \"" + out.string() + "\"");
  ASSERT_EQ(r.code, 0) << r.output;
  const auto a = read_vectors(out / "vectors.sum_a.tsv");
  const auto b = read_vectors(out / "vectors.sum_b.tsv");
  const auto both = read_vectors(out / "vectors.a_plus_b.tsv");
  ASSERT_EQ(a.size(), 12u);
  ASSERT_EQ(both.size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(both[i].values.size(), a[i].values.size());
    for (std::size_t k = 0; k < a[i].values.size(); ++k) EXPECT_EQ(both[i].values[k], a[i].values[k] + b[i].values[k]);
  }
  EXPECT_EQ(slurp(out / "embed.ini"), run_cli(kSmall + "--print-config").output);
}

TEST_F(CliPipeline, DirectOnlyContradictionIsAUsageError) {
  const Invocation r = run_cli(kSmall + "embed --model \"" + model().string() + "\" --lang a --input \"" +
                    (task() / "test.a.tsv").string() + "\" --variant con_b --no-translator --out \"" +
                    (root() / "bad").string() + "\"");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("con_b"), std::string::npos);
  EXPECT_NE(r.output.find("direct_only"), std::string::npos);
}

TEST_F(CliPipeline, BinaryAndTextVectorFilesAgree) {
  const std::string common = kSmall + "embed --model \"" + model().string() + "\" --lang a --input \"" +
                             (task() / "train.a.tsv").string() + "\" --mode direct-only --variant con_a --out \"";
  ASSERT_EQ(run_cli(common + (root() / "t").string() + "\"").code, 0);
  ASSERT_EQ(run_cli(common + (root() / "bin").string() + "\" --binary --threads 3").code, 0);
  const auto text = read_vectors(root() / "t" / "vectors.con_a.tsv");
  const auto bin = read_vectors_binary(root() / "bin" / "vectors.con_a.bin");
  ASSERT_EQ(text.size(), bin.size());
  for (std::size_t i = 0; i < text.size(); ++i) EXPECT_EQ(text[i].values, bin[i].values);
}

TEST_F(CliPipeline, TranslateIsRepeatable) {
  const std::string args = kSmall + "translate --model \"" + model().string() + "\" --from a --input \"" +
                           (task() / "heldout.a.txt").string() + "\" --out \"";
  ASSERT_EQ(run_cli(args + (root() / "t1.txt").string() + "\"").code, 0);
  ASSERT_EQ(run_cli(args + (root() / "t2.txt").string() + "\"").code, 0);
  EXPECT_EQ(slurp(root() / "t1.txt"), slurp(root() / "t2.txt"));
  const std::string s = slurp(root() / "t1.txt");
  EXPECT_EQ(static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')), 10u);
}

TEST_F(CliPipeline, EvalPrintsReports) {
  const fs::path out = root() / "ev";
  ASSERT_EQ(run_cli(kSmall + "embed --model \"" + model().string() + "\" --lang a --input \"" +
                (task() / "train.a.tsv").string() + "\" --variant con_a --out \"" + (out / "a").string() + "\"")
                .code,
            0);
  ASSERT_EQ(run_cli(kSmall + "embed --model \"" + model().string() + "\" --lang b --input \"" +
                (task() / "test.b.tsv").string() + "\" --variant con_a --out \"" + (out / "b").string() + "\"")
                .code,
            0);
  const Invocation r = run_cli(kSmall + "eval --train-vectors \"" + (out / "a" / "vectors.con_a.tsv").string() +
                    "\" --train-docs \"" + (task() / "train.a.tsv").string() + "\" --test-vectors \"" +
                    (out / "b" / "vectors.con_a.tsv").string() + "\" --test-docs \"" +
                    (task() / "test.b.tsv").string() + "\" --out \"" + (out / "report.txt").string() + "\"");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("accuracy\t"), std::string::npos);
  EXPECT_NE(r.output.find("confusion"), std::string::npos);
  EXPECT_EQ(slurp(out / "report.txt"), r.output);

  const Invocation mismatch = run_cli(kSmall + "eval --train-vectors \"" + (out / "a" / "vectors.con_a.tsv").string() +
                           "\" --train-docs \"" + (task() / "train.a.tsv").string() + "\" --test-vectors \"" +
                           (root() / "vec" / "vectors.a_plus_b.tsv").string() + "\" --test-docs \"" +
                           (task() / "test.b.tsv").string() + "\"");
  EXPECT_EQ(mismatch.code, 2);

  ASSERT_EQ(run_cli(kSmall + "embed --model \"" + model().string() + "\" --lang b --input \"" +
                (task() / "test.b.tsv").string() + "\" --variant con_b --mode direct-only --out \"" +
                (out / "own").string() + "\"")
                .code,
            0);
  const Invocation own = run_cli(kSmall + "eval --train-vectors \"" + (out / "a" / "vectors.con_a.tsv").string() +
                      "\" --train-docs \"" + (task() / "train.a.tsv").string() + "\" --test-vectors \"" +
                      (out / "own" / "vectors.con_b.tsv").string() + "\" --test-docs \"" +
                      (task() / "test.b.tsv").string() + "\"");
  ASSERT_EQ(own.code, 0) << own.output;
  EXPECT_NE(own.output.find("con_a/con_b"), std::string::npos);

  const Invocation tfidf = run_cli(kSmall + "eval --baseline tfidf --model \"" + model().string() + "\" --train-docs \"" +
                        (task() / "train.a.tsv").string() + "\" --test-docs \"" + (task() / "test.b.tsv").string() +
                        "\"");
  ASSERT_EQ(tfidf.code, 0) << tfidf.output;
  EXPECT_NE(tfidf.output.find("tf-idf baseline"), std::string::npos);
}

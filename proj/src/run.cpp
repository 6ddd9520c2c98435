// SPDX-License-Identifier: Apache-2.0
#include "xdv/run.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "xdv/checkpoint.hpp"
#include "xdv/digest.hpp"
#include "xdv/error.hpp"
#include "xdv/random.hpp"
#include "xdv/training.hpp"

namespace xdv {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return to_hex(sha256(ss.str()));
}

void require(const std::filesystem::path& path, const std::string& producer) {
  if (!std::filesystem::exists(path)) throw InputError(path.string() + " not found; run " + producer + " first");
}

}  // namespace

std::vector<std::string> parameter_digests(NmtModel& model) {
  std::vector<std::string> out;
  for (const auto& p : model.parameters()) out.push_back(tensor_digest(*p.tensor));
  return out;
}

StageOne run_stage_one(const ParallelText& text, const RunConfig& config, std::ostream* metrics) {
  Pipeline pipeline = Pipeline::learn(text, config.pipeline);
  const ParallelCorpus corpus = encode_parallel(pipeline, text, config.nmt.max_len);
  auto logger = [metrics](const char* direction) -> NmtBatchCallback {
    if (!metrics) return {};
    return [metrics, direction](const NmtBatchRecord& r) {
      *metrics << direction << '\t' << r.epoch << '\t' << r.batch << '\t' << num(r.loss) << '\n';
    };
  };
  NmtPair pair = pretrain_nmt(corpus, pipeline.vocab(Lang::a).size(), pipeline.vocab(Lang::b).size(),
                              config.nmt_dims, config.nmt, logger("ab"), logger("ba"));
  return {std::move(pipeline), std::move(pair.ab), std::move(pair.ba)};
}

SharedStack run_stage_two(const ParallelCorpus& corpus, StageOne& models, const RunConfig& config,
                          std::ostream* metrics, AdamState* optimizer) {
  const auto before_ab = parameter_digests(models.ab), before_ba = parameter_digests(models.ba);
  SharedStack stack = SharedStack::initialized(config.shared_config(), derive_seed(config.seed, "shared"));
  SharedBatchCallback log;
  if (metrics) {
    log = [metrics](const SharedBatchRecord& r) {
      std::vector<double> neg;
      for (const auto& row : r.loss.d_neg) neg.insert(neg.end(), row.begin(), row.end());
      *metrics << r.epoch << '\t' << r.batch << '\t' << num(r.loss.l_com) << '\t' << num(r.loss.l_mt) << '\t'
               << num(r.loss.l_mt_ab) << '\t' << num(r.loss.l_mt_ba) << '\t' << num(r.loss.l_d) << '\t'
               << num(mean(r.loss.d_pos)) << '\t' << num(mean(neg)) << '\n';
    };
  }
  AdamState state = train_shared(corpus, models.ab, models.ba, stack, config.shared, log);
  if (parameter_digests(models.ab) != before_ab || parameter_digests(models.ba) != before_ba) {
    throw std::logic_error("a stage-one tensor changed during shared training");
  }
  if (optimizer) *optimizer = std::move(state);
  return stack;
}

void save_stage_one(const ModelDir& dir, StageOne& models, const RunConfig& config) {
  std::filesystem::create_directories(dir.root);
  models.pipeline.save(dir.pipeline());
  for (Lang l : {Lang::a, Lang::b}) {
    Checkpoint c = to_checkpoint(l == Lang::a ? models.ab : models.ba, config.seed, config.nmt.epochs);
    c.set_meta("config", to_ini(config));
    save_checkpoint(dir.nmt(l), c);
  }
}

StageOne load_stage_one(const ModelDir& dir) {
  require(dir.pipeline() / "bpe.a.merges", "train-nmt");
  require(dir.nmt(Lang::a), "train-nmt");
  require(dir.nmt(Lang::b), "train-nmt");
  StageOne s{Pipeline::load(dir.pipeline()), nmt_from_checkpoint(load_checkpoint(dir.nmt(Lang::a))),
             nmt_from_checkpoint(load_checkpoint(dir.nmt(Lang::b)))};
  s.ab.set_trainable(false);
  s.ba.set_trainable(false);
  return s;
}

void save_stage_two(const ModelDir& dir, SharedStack& stack, const RunConfig& config,
                    const std::optional<AdamState>& optimizer) {
  Checkpoint c = to_checkpoint(stack, config.seed, config.shared.epochs);
  c.set_meta("config", to_ini(config));
  c.set_meta("nmt.ab.sha256", file_digest(dir.nmt(Lang::a)));
  c.set_meta("nmt.ba.sha256", file_digest(dir.nmt(Lang::b)));
  c.optimizer = optimizer;
  save_checkpoint(dir.shared(), c);
}

SharedStack load_stage_two(const ModelDir& dir, std::optional<Variant> expected) {
  require(dir.shared(), "train-shared");
  const Checkpoint c = load_checkpoint(dir.shared());
  for (Lang l : {Lang::a, Lang::b}) {
    const std::string key = std::string("nmt.") + (l == Lang::a ? "ab" : "ba") + ".sha256";
    if (c.meta(key) != file_digest(dir.nmt(l))) {
      throw FormatError(dir.shared().string() + " was trained against a different " + dir.nmt(l).filename().string());
    }
  }
  return shared_from_checkpoint(c, expected);
}

}  // namespace xdv

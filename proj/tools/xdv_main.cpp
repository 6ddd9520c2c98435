// SPDX-License-Identifier: Apache-2.0
// xdv: corpus preparation, two-stage training, document vectors and evaluation.
// Exit codes: 0 success, 1 internal failure, 2 usage or input error.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "xdv/bpe.hpp"
#include "xdv/config.hpp"
#include "xdv/docvec.hpp"
#include "xdv/error.hpp"
#include "xdv/eval.hpp"
#include "xdv/run.hpp"
#include "xdv/synthetic.hpp"

namespace fs = std::filesystem;
using namespace xdv;

namespace {

constexpr int kOk = 0;
constexpr int kInternal = 1;
constexpr int kUsage = 2;

struct Globals {
  std::string config_path;
  std::string profile;
  std::string arch;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::vector<std::string> sets;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Profile, then config file, then --set, then the dedicated flags.
RunConfig resolve(const Globals& g) {
  const std::string ini = g.config_path.empty() ? "" : slurp(g.config_path);
  RunConfig named = make_profile("desk", Variant::gru_sattn);
  if (!ini.empty()) named = apply_ini(named, ini, g.config_path);
  const std::string profile = g.profile.empty() ? named.profile : g.profile;
  const Variant variant = g.arch.empty() ? named.variant : parse_variant(g.arch);
  RunConfig c = make_profile(profile, variant);
  if (!ini.empty()) c = apply_ini(c, ini, g.config_path);
  c.profile = profile;
  c.variant = variant;
  for (const std::string& s : g.sets) {
    const auto eq = s.find('='), dot = s.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
      throw InputError("--set expects section.key=value, got '" + s + "'");
    }
    c = apply_ini(c, "[" + s.substr(0, dot) + "]\n" + s.substr(dot + 1, eq - dot - 1) + " = " + s.substr(eq + 1) + "\n",
                  "--set");
  }
  if (g.seed) c.seed = *g.seed;
  if (g.threads) c.threads = std::max<std::size_t>(1, *g.threads);
  c.sync();
  return c;
}

void write_config(const fs::path& path, const RunConfig& c) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << to_ini(c);
}

fs::path beside(const fs::path& file, const std::string& suffix) { return fs::path(file.string() + suffix); }

Lang parse_lang(const std::string& s) {
  if (s == "a") return Lang::a;
  if (s == "b") return Lang::b;
  throw InputError("language must be a or b, got '" + s + "'");
}

EmbedMode parse_cli_mode(std::string s) {
  std::replace(s.begin(), s.end(), '-', '_');
  return parse_mode(s);
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

bool is_binary(const fs::path& p) { return p.extension() == ".bin"; }

std::vector<NamedVector> load_vectors(const fs::path& p) {
  return is_binary(p) ? read_vectors_binary(p) : read_vectors(p);
}

std::vector<LabeledDoc> read_documents(const fs::path& path, bool plain) {
  if (!plain) return read_labeled(path);
  std::vector<LabeledDoc> docs;
  for (auto& line : read_lines(path)) docs.push_back({0, std::move(line)});
  return docs;
}

// ---- commands ----

int cmd_make_task(const RunConfig& c, const fs::path& out) {
  const SyntheticTask task = make_synthetic_task(c.seed, c.synthetic);
  write_synthetic_task(task, out);
  write_config(out / "make-task.ini", c);
  std::printf("wrote synthetic task (seed %llu) to %s\n", static_cast<unsigned long long>(c.seed), out.c_str());
  return kOk;
}

int cmd_learn_bpe(RunConfig c, const std::vector<std::string>& inputs, std::optional<std::size_t> merges,
                  const fs::path& out) {
  if (merges) c.pipeline.merges = *merges;
  std::vector<std::string> words;
  for (const auto& f : inputs) {
    for (const auto& line : read_lines(f)) {
      auto w = split_words(line);
      words.insert(words.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
    }
  }
  const BpeModel model = learn_bpe(words, c.pipeline.merges);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  model.save(out);
  write_config(beside(out, ".ini"), c);
  std::printf("learned %zu merges from %zu words\n", model.num_merges(), words.size());
  return kOk;
}

int cmd_apply_bpe(const fs::path& merges, const fs::path& input, const fs::path& output, bool strip) {
  const BpeModel model = strip ? BpeModel() : BpeModel::load(merges);
  std::ifstream in(input, std::ios::binary);
  if (!in) throw InputError("cannot read " + input.string());
  std::ofstream out = open_out(output);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tokens = split_words(line);
    out << join(strip ? merge_subwords(tokens) : model.apply(tokens)) << '\n';
  }
  return kOk;
}

int cmd_train_nmt(const RunConfig& c, const std::vector<std::string>& parallel, const fs::path& out) {
  const ParallelText text = read_parallel(parallel.at(0), parallel.at(1));
  const ModelDir dir{out};
  std::ofstream metrics = open_out(out / "metrics.nmt.tsv");
  StageOne s = run_stage_one(text, c, &metrics);
  save_stage_one(dir, s, c);
  write_config(out / "train-nmt.ini", c);
  std::printf("stage one: %zu pairs, vocabularies %zu / %zu, checkpoints in %s\n", text.a.size(),
              s.pipeline.vocab(Lang::a).size(), s.pipeline.vocab(Lang::b).size(), out.c_str());
  return kOk;
}

int cmd_train_shared(const RunConfig& c, const std::vector<std::string>& parallel, const fs::path& model) {
  const ModelDir dir{model};
  StageOne s = load_stage_one(dir);
  const ParallelText text = read_parallel(parallel.at(0), parallel.at(1));
  const ParallelCorpus corpus = encode_parallel(s.pipeline, text, c.nmt.max_len);
  RunConfig cfg = c;
  if (cfg.nmt_dims.key_dim() != s.ab.config.key_dim()) {
    throw InputError("configured encoder width " + std::to_string(cfg.nmt_dims.d_enc) +
                     " does not match the stage-one checkpoints (" + std::to_string(s.ab.config.d_enc) + ")");
  }
  std::ofstream metrics = open_out(model / "metrics.shared.tsv");
  AdamState state;
  SharedStack stack = run_stage_two(corpus, s, cfg, &metrics, &state);
  save_stage_two(dir, stack, cfg, state);
  write_config(model / "train-shared.ini", cfg);
  std::printf("stage two: %zu pairs, %s d_h=%zu r=%zu, checkpoint %s\n", corpus.size(), variant_name(cfg.variant),
              cfg.d_h, cfg.r, dir.shared().c_str());
  return kOk;
}

int cmd_embed(const RunConfig& c, const fs::path& model, Lang lang, const fs::path& input, bool plain,
              const std::vector<std::string>& variant_names, EmbedMode mode, const fs::path& out, bool binary) {
  std::vector<Composition> variants;
  for (const auto& v : variant_names) variants.push_back(parse_composition(v));
  if (variants.empty()) throw InputError("embed needs at least one --variant");
  for (Composition v : variants) check_mode(v, lang, mode);
  const ModelDir dir{model};
  StageOne s = load_stage_one(dir);
  const SharedStack stack = load_stage_two(dir, c.variant);
  const std::vector<LabeledDoc> docs = read_documents(input, plain);
  const DocEmbedder embedder{s.pipeline, s.ab, s.ba, stack, c.sentence_end, c.compose};

  std::vector<std::vector<DocVector>> result(docs.size());
  std::vector<std::string> errors(docs.size());
  auto work = [&](std::size_t worker, std::size_t workers) {
    for (std::size_t i = worker; i < docs.size(); i += workers) {
      try {
        result[i] = embed_document(embedder, lang, docs[i].text, variants, mode, "document " + std::to_string(i + 1));
      } catch (const Error& e) {
        errors[i] = e.what();
      }
    }
  };
  const std::size_t workers = std::min<std::size_t>(c.threads, std::max<std::size_t>(docs.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work, w, workers);
  work(0, workers);
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (!e.empty()) throw InputError(input.string() + ": " + e);

  fs::create_directories(out);
  for (std::size_t k = 0; k < variants.size(); ++k) {
    std::vector<NamedVector> vectors;
    for (std::size_t i = 0; i < docs.size(); ++i)
      vectors.push_back({std::to_string(i), variants[k], std::move(result[i][k].values)});
    const fs::path file = out / (std::string("vectors.") + composition_name(variants[k]) + (binary ? ".bin" : ".tsv"));
    if (binary) {
      write_vectors_binary(file, vectors);
    } else {
      write_vectors(file, vectors);
    }
  }
  write_config(out / "embed.ini", c);
  std::printf("embedded %zu documents in language %s (%s)\n", docs.size(), lang_name(lang), mode_name(mode));
  return kOk;
}

int cmd_translate(const RunConfig& c, const fs::path& model, Lang from, const fs::path& input, const fs::path& output) {
  StageOne s = load_stage_one(ModelDir{model});
  const NmtModel& translator = from == Lang::a ? s.ab : s.ba;
  std::ifstream in(input, std::ios::binary);
  if (!in) throw InputError("cannot read " + input.string());
  std::ofstream out = open_out(output);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out << (split_words(line).empty() ? "" : translate_document(s.pipeline, translator, from, line, c.sentence_end))
        << '\n';
  }
  return kOk;
}

std::vector<int> labels_of(const std::vector<LabeledDoc>& docs) {
  std::vector<int> out;
  for (const auto& d : docs) out.push_back(d.label);
  return out;
}

Matrix matrix_of(const std::vector<NamedVector>& vectors, const fs::path& origin, std::size_t expected) {
  if (vectors.size() != expected) {
    throw InputError(origin.string() + " holds " + std::to_string(vectors.size()) + " vectors for " +
                     std::to_string(expected) + " documents");
  }
  Matrix m;
  for (const auto& v : vectors) {
    if (v.variant != vectors.front().variant) throw InputError(origin.string() + " mixes document-vector variants");
    m.push_back(v.values);
  }
  return m;
}

// Single-language variants pair with their counterpart in the other language.
bool comparable(Composition train, Composition test) {
  auto family = [](Composition c) {
    if (c == Composition::sum_b) return Composition::sum_a;
    if (c == Composition::con_b) return Composition::con_a;
    return c;
  };
  return family(train) == family(test);
}

int cmd_eval(const RunConfig& c, const fs::path& train_vectors, const fs::path& train_docs,
             const fs::path& test_vectors, const fs::path& test_docs, const fs::path& report_path) {
  const auto train_labeled = read_labeled(train_docs), test_labeled = read_labeled(test_docs);
  const auto tv = load_vectors(train_vectors), sv = load_vectors(test_vectors);
  const auto train = prepare(matrix_of(tv, train_vectors, train_labeled.size()), labels_of(train_labeled),
                             train_docs.filename().string());
  const auto test = prepare(matrix_of(sv, test_vectors, test_labeled.size()), labels_of(test_labeled),
                            test_docs.filename().string(), &train.mean);
  if (!tv.empty() && !sv.empty() && !comparable(tv.front().variant, sv.front().variant)) {
    throw InputError(std::string("training vectors are ") + composition_name(tv.front().variant) +
                     ", test vectors " + composition_name(sv.front().variant));
  }
  const AccuracyReport r = cross_lingual_eval(train, test, c.classifier);
  const std::string text = format_report(r, std::string("document vectors ") + composition_name(tv.front().variant) + "/" +
                                             composition_name(sv.front().variant),
                                         to_ini(c));
  std::fputs(text.c_str(), stdout);
  if (!report_path.empty()) open_out(report_path) << text;
  return kOk;
}

int cmd_eval_tfidf(const RunConfig& c, const fs::path& model, Lang train_lang, const fs::path& train_docs,
                   const fs::path& test_docs, const fs::path& report_path) {
  const auto train_labeled = read_labeled(train_docs), test_labeled = read_labeled(test_docs);
  std::vector<std::string> train_text, test_text;
  for (const auto& d : train_labeled) train_text.push_back(d.text);
  if (model.empty()) {
    for (const auto& d : test_labeled) test_text.push_back(d.text);
  } else {
    StageOne s = load_stage_one(ModelDir{model});
    const Lang from = other(train_lang);
    const NmtModel& translator = from == Lang::a ? s.ab : s.ba;
    for (const auto& d : test_labeled)
      test_text.push_back(translate_document(s.pipeline, translator, from, d.text, c.sentence_end));
  }
  const AccuracyReport r =
      tfidf_baseline(train_text, labels_of(train_labeled), test_text, labels_of(test_labeled), c.tfidf_top_k,
                     c.classifier);
  const std::string text = format_report(r, "tf-idf baseline", to_ini(c));
  std::fputs(text.c_str(), stdout);
  if (!report_path.empty()) open_out(report_path) << text;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"xdv: cross-lingual document vectors from translation models"};
  app.require_subcommand(0, 1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "INI file applied over the profile")->check(CLI::ExistingFile);
  app.add_option("--profile", g.profile, "Built-in profile")->check(CLI::IsMember({"paper", "desk"}));
  app.add_option("--arch", g.arch, "Shared-stack architecture")->check(CLI::IsMember({"gru_sattn", "stacked_sattn"}));
  app.add_option("--seed", g.seed, "Run seed");
  app.add_option("--threads", g.threads, "Worker threads");
  app.add_option("--set", g.sets, "Override one setting, section.key=value");
  bool print_config = false;
  app.add_flag("--print-config", print_config, "Print the resolved configuration and exit");

  std::string out, input, output, model, merges_path, lang = "a", mode = "translator-combined", report, baseline;
  std::string train_vectors, train_docs, test_vectors, test_docs;
  std::vector<std::string> inputs, parallel, variants;
  std::optional<std::size_t> merges;
  bool strip = false, binary = false, plain = false, no_translator = false, con_both_concat = false;

  auto* make_task = app.add_subcommand("make-task", "Write the synthetic cipher-language task");
  make_task->add_option("--out", out, "Output directory")->required();

  auto* learn = app.add_subcommand("learn-bpe", "Learn a BPE merge list");
  learn->add_option("--input", inputs, "Text files")->required();
  learn->add_option("--merges", merges, "Number of merges (default from the profile)");
  learn->add_option("--out", out, "Merge file")->required();

  auto* apply = app.add_subcommand("apply-bpe", "Segment text with a merge list, or undo it with --strip");
  apply->add_option("--bpe", merges_path, "Merge file");
  apply->add_option("--input", input, "Text file")->required();
  apply->add_option("--out", output, "Output file")->required();
  apply->add_flag("--strip", strip, "Join subwords back into words");

  auto* train_nmt = app.add_subcommand("train-nmt", "Stage one: both translation directions");
  train_nmt->add_option("--parallel", parallel, "Aligned files of languages a and b")->required()->expected(2);
  train_nmt->add_option("--out", out, "Model directory")->required();

  auto* train_shared = app.add_subcommand("train-shared", "Stage two: the shared stack");
  train_shared->add_option("--parallel", parallel, "Aligned files of languages a and b")->required()->expected(2);
  train_shared->add_option("--model", model, "Model directory from train-nmt")->required();

  auto* embed = app.add_subcommand("embed", "Document vectors");
  embed->add_option("--model", model, "Model directory")->required();
  embed->add_option("--lang", lang, "Language of the documents")->check(CLI::IsMember({"a", "b"}));
  embed->add_option("--input", input, "Labeled documents (label TAB text), or lines with --plain")->required();
  embed->add_flag("--plain", plain, "One unlabeled document per line");
  embed->add_option("--variant", variants, "sum_a, sum_b, con_a, con_b, a_concat_b, a_plus_b or con_both")
      ->required();
  embed->add_option("--mode", mode, "direct-only or translator-combined")
      ->check(CLI::IsMember({"direct-only", "translator-combined"}));
  embed->add_flag("--no-translator", no_translator, "Same as --mode direct-only");
  embed->add_flag("--con-both-concat", con_both_concat, "con_both as the concatenation of con_a and con_b");
  embed->add_flag("--binary", binary, "Binary vector files");
  embed->add_option("--out", out, "Output directory")->required();

  auto* translate_cmd = app.add_subcommand("translate", "Greedy translation, one document per line");
  translate_cmd->add_option("--model", model, "Model directory")->required();
  translate_cmd->add_option("--from", lang, "Source language")->check(CLI::IsMember({"a", "b"}));
  translate_cmd->add_option("--input", input, "Text file")->required();
  translate_cmd->add_option("--out", output, "Output file")->required();

  auto* eval = app.add_subcommand("eval", "Cross-lingual classification report");
  eval->add_option("--baseline", baseline, "Use the tf-idf baseline instead of vector files")
      ->check(CLI::IsMember({"tfidf"}));
  eval->add_option("--train-vectors", train_vectors, "Vector file of the training documents");
  eval->add_option("--test-vectors", test_vectors, "Vector file of the test documents");
  eval->add_option("--train-docs", train_docs, "Labeled training documents")->required();
  eval->add_option("--test-docs", test_docs, "Labeled test documents")->required();
  eval->add_option("--model", model, "tf-idf: translate the test documents with this model");
  eval->add_option("--train-lang", lang, "tf-idf: language of the training documents")
      ->check(CLI::IsMember({"a", "b"}));
  eval->add_option("--out", report, "Also write the report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    RunConfig c = resolve(g);
    if (con_both_concat) c.compose.con_both_concat = true;
    if (print_config) {
      std::fputs(to_ini(c).c_str(), stdout);
      return kOk;
    }
    if (app.get_subcommands().empty()) {
      std::fputs(app.help().c_str(), stderr);
      return kUsage;
    }
    if (*make_task) return cmd_make_task(c, out);
    if (*learn) return cmd_learn_bpe(c, inputs, merges, out);
    if (*apply) {
      if (!strip && merges_path.empty()) throw InputError("apply-bpe needs --bpe unless --strip is given");
      return cmd_apply_bpe(merges_path, input, output, strip);
    }
    if (*train_nmt) return cmd_train_nmt(c, parallel, out);
    if (*train_shared) return cmd_train_shared(c, parallel, model);
    if (*embed) {
      const EmbedMode m = no_translator ? EmbedMode::direct_only : parse_cli_mode(mode);
      return cmd_embed(c, model, parse_lang(lang), input, plain, variants, m, out, binary);
    }
    if (*translate_cmd) return cmd_translate(c, model, parse_lang(lang), input, output);
    if (*eval) {
      if (baseline == "tfidf") return cmd_eval_tfidf(c, model, parse_lang(lang), train_docs, test_docs, report);
      if (train_vectors.empty() || test_vectors.empty()) {
        throw InputError("eval needs --train-vectors and --test-vectors (or --baseline tfidf)");
      }
      return cmd_eval(c, train_vectors, train_docs, test_vectors, test_docs, report);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "xdv: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "xdv: internal error: %s\n", e.what());
    return kInternal;
  }
  return kInternal;
}

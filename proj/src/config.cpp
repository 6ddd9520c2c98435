// SPDX-License-Identifier: Apache-2.0
#include "xdv/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "xdv/error.hpp"

namespace xdv {
namespace {

namespace pt = boost::property_tree;

struct Binding {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

std::string format(std::size_t v) { return std::to_string(v); }
std::string format(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
std::string format(bool v) { return v ? "true" : "false"; }
std::string format(const std::string& v) { return v; }

void parse(const std::string& text, std::size_t& out) {
  const auto* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, out);
  if (ec != std::errc() || p != end) throw InputError("expected a non-negative integer, got '" + text + "'");
}
void parse(const std::string& text, double& out) {
  std::size_t used = 0;
  try {
    out = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw InputError("expected a number, got '" + text + "'");
}
void parse(const std::string& text, bool& out) {
  if (text == "true" || text == "1" || text == "yes") out = true;
  else if (text == "false" || text == "0" || text == "no") out = false;
  else throw InputError("expected true or false, got '" + text + "'");
}
void parse(const std::string& text, std::string& out) { out = text; }

template <class T>
Binding field(T RunConfig::*member) {
  return {[member](const RunConfig& c) { return format(c.*member); },
          [member](RunConfig& c, const std::string& s) { parse(s, c.*member); }};
}

template <class Outer, class T>
Binding nested(Outer RunConfig::*outer, T Outer::*member) {
  return {[=](const RunConfig& c) { return format(c.*outer.*member); },
          [=](RunConfig& c, const std::string& s) { parse(s, c.*outer.*member); }};
}

const std::vector<std::pair<std::string, Binding>>& bindings() {
  static const std::vector<std::pair<std::string, Binding>> table = [] {
    std::vector<std::pair<std::string, Binding>> t;
    t.emplace_back("run.profile", field(&RunConfig::profile));
    t.emplace_back("run.seed", Binding{[](const RunConfig& c) { return std::to_string(c.seed); },
                                       [](RunConfig& c, const std::string& s) {
                                         std::size_t v = 0;
                                         parse(s, v);
                                         c.seed = v;
                                       }});
    t.emplace_back("run.threads", field(&RunConfig::threads));
    t.emplace_back("model.variant", Binding{[](const RunConfig& c) { return std::string(variant_name(c.variant)); },
                                            [](RunConfig& c, const std::string& s) { c.variant = parse_variant(s); }});
    t.emplace_back("model.d_h", field(&RunConfig::d_h));
    t.emplace_back("model.r", field(&RunConfig::r));
    t.emplace_back("model.emb", nested(&RunConfig::nmt_dims, &NmtConfig::emb));
    t.emplace_back("model.d_enc", nested(&RunConfig::nmt_dims, &NmtConfig::d_enc));
    t.emplace_back("model.d_dec", nested(&RunConfig::nmt_dims, &NmtConfig::d_dec));
    t.emplace_back("bpe.merges", nested(&RunConfig::pipeline, &PipelineConfig::merges));
    t.emplace_back("bpe.vocab_limit", nested(&RunConfig::pipeline, &PipelineConfig::vocab_limit));
    t.emplace_back("bpe.joint", nested(&RunConfig::pipeline, &PipelineConfig::joint_bpe));
    t.emplace_back("nmt.epochs", nested(&RunConfig::nmt, &NmtTrainConfig::epochs));
    t.emplace_back("nmt.batch", nested(&RunConfig::nmt, &NmtTrainConfig::batch));
    t.emplace_back("nmt.alpha", nested(&RunConfig::nmt, &NmtTrainConfig::alpha));
    t.emplace_back("nmt.max_len", nested(&RunConfig::nmt, &NmtTrainConfig::max_len));
    t.emplace_back("nmt.clip_norm", nested(&RunConfig::nmt, &NmtTrainConfig::clip_norm));
    t.emplace_back("nmt.decay_to", nested(&RunConfig::nmt, &NmtTrainConfig::decay_to));
    t.emplace_back("shared.epochs", nested(&RunConfig::shared, &SharedTrainConfig::epochs));
    t.emplace_back("shared.batch", nested(&RunConfig::shared, &SharedTrainConfig::batch));
    t.emplace_back("shared.alpha", nested(&RunConfig::shared, &SharedTrainConfig::alpha));
    t.emplace_back("shared.clip_norm", nested(&RunConfig::shared, &SharedTrainConfig::clip_norm));
    t.emplace_back("shared.decay_to", nested(&RunConfig::shared, &SharedTrainConfig::decay_to));
    auto loss = [](auto member) {
      return Binding{[=](const RunConfig& c) { return format(c.shared.loss.*member); },
                     [=](RunConfig& c, const std::string& s) { parse(s, c.shared.loss.*member); }};
    };
    t.emplace_back("shared.beta", loss(&LossConfig::beta));
    t.emplace_back("shared.negatives", loss(&LossConfig::negatives));
    t.emplace_back("shared.margin", loss(&LossConfig::margin));
    t.emplace_back("shared.symmetric_negatives", loss(&LossConfig::symmetric_negatives));
    t.emplace_back("eval.C", nested(&RunConfig::classifier, &ClassifierConfig::C));
    t.emplace_back("eval.max_iter", nested(&RunConfig::classifier, &ClassifierConfig::max_iter));
    t.emplace_back("eval.tol", nested(&RunConfig::classifier, &ClassifierConfig::tol));
    t.emplace_back("eval.balanced", nested(&RunConfig::classifier, &ClassifierConfig::balanced));
    t.emplace_back("eval.tfidf_top_k", field(&RunConfig::tfidf_top_k));
    t.emplace_back("docvec.con_both_concat", nested(&RunConfig::compose, &ComposeOptions::con_both_concat));
    t.emplace_back("docvec.sentence_end", field(&RunConfig::sentence_end));
    t.emplace_back("task.parallel", nested(&RunConfig::synthetic, &SyntheticSizes::parallel));
    t.emplace_back("task.heldout", nested(&RunConfig::synthetic, &SyntheticSizes::heldout));
    t.emplace_back("task.train_docs", nested(&RunConfig::synthetic, &SyntheticSizes::train_docs));
    t.emplace_back("task.test_docs", nested(&RunConfig::synthetic, &SyntheticSizes::test_docs));
    t.emplace_back("task.line_sentences", nested(&RunConfig::synthetic, &SyntheticSizes::line_sentences));
    return t;
  }();
  return table;
}

const Binding* find_binding(const std::string& key) {
  for (const auto& [name, b] : bindings())
    if (name == key) return &b;
  return nullptr;
}

}  // namespace

void RunConfig::sync() {
  nmt.seed = seed;
  shared.seed = seed;
  nmt.threads = threads;
  shared.threads = threads;
}

RunConfig make_profile(const std::string& profile, Variant variant) {
  RunConfig c;
  c.profile = profile;
  c.variant = variant;
  if (profile == "desk") {
    c.d_h = variant == Variant::gru_sattn ? 32 : 16;
    c.r = variant == Variant::gru_sattn ? 4 : 8;
    c.nmt_dims.emb = 16;
    c.nmt_dims.d_enc = 32;
    c.nmt_dims.d_dec = 32;
    c.pipeline = {500, 2000, false};
    c.nmt.epochs = 15;
    c.nmt.batch = 20;
    c.nmt.alpha = 0.005;
    c.shared.epochs = 10;
    c.shared.batch = 40;
    c.shared.alpha = 0.015;
    c.shared.clip_norm = 5.0;
    c.shared.decay_to = 0.05;
    c.shared.loss.negatives = 39;
    c.tfidf_top_k = 1000;
  } else if (profile == "paper") {
    c.d_h = variant == Variant::gru_sattn ? 1024 : 500;
    c.r = variant == Variant::gru_sattn ? 4 : 8;
    c.nmt_dims.emb = 500;
    c.nmt_dims.d_enc = 1024;
    c.nmt_dims.d_dec = 1024;
    c.pipeline = {89500, 85000, false};
    c.nmt.epochs = 10;
    c.nmt.batch = 80;
    c.nmt.alpha = 1e-4;
    c.shared.epochs = variant == Variant::gru_sattn ? 10 : 5;
    c.shared.batch = 40;
    c.shared.alpha = 1e-4;
    c.shared.loss.negatives = 20;
    c.tfidf_top_k = 50000;
  } else {
    throw InputError("unknown profile '" + profile + "' (paper or desk)");
  }
  c.nmt.max_len = 50;
  c.shared.loss.beta = 0.5;
  c.shared.loss.margin = 0.0;
  c.sync();
  return c;
}

RunConfig apply_ini(const RunConfig& base, const std::string& ini_text, const std::string& origin) {
  pt::ptree tree;
  std::istringstream in(ini_text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InputError(origin + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  RunConfig c = base;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw InputError(origin + ": key '" + section + "' is outside any section");
    for (const auto& [key, value] : body) {
      const std::string name = section + "." + key;
      const Binding* b = find_binding(name);
      if (!b) throw InputError(origin + ": unknown setting '" + name + "'");
      try {
        b->set(c, value.data());
      } catch (const InputError& e) {
        throw InputError(origin + ": " + name + ": " + e.what());
      }
    }
  }
  c.sync();
  return c;
}

RunConfig apply_ini_file(const RunConfig& base, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return apply_ini(base, ss.str(), path.string());
}

std::string to_ini(const RunConfig& config) {
  std::string out, section;
  for (const auto& [name, b] : bindings()) {
    const auto dot = name.find('.');
    const std::string s = name.substr(0, dot);
    if (s != section) {
      if (!section.empty()) out += '\n';
      out += "[" + s + "]\n";
      section = s;
    }
    out += name.substr(dot + 1) + " = " + b.get(config) + "\n";
  }
  return out;
}

}  // namespace xdv

// SPDX-License-Identifier: Apache-2.0
#include "xdv/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "xdv/bpe.hpp"
#include "xdv/error.hpp"

namespace xdv {
namespace {

constexpr double kInitialStep = 1.0;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct Binary {
  const LabeledVectorSet& set;
  std::vector<double> sign;     // +1 for the positive class
  std::vector<double> weight;   // class weight of each sample
  double lambda;

  double objective(const std::vector<double>& w, double b) const {
    const double n = static_cast<double>(set.vectors.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < set.vectors.size(); ++i) {
      loss += weight[i] * std::max(0.0, 1.0 - sign[i] * (dot(w, set.vectors[i]) + b));
    }
    return 0.5 * lambda * dot(w, w) + loss / n;
  }
};

struct BinaryResult {
  std::vector<double> w;
  double b = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

BinaryResult train_binary(const Binary& p, const ClassifierConfig& cfg) {
  const std::size_t d = p.set.dim();
  const double n = static_cast<double>(p.set.vectors.size());
  std::vector<double> w(d, 0.0), gw(d);
  double b = 0.0;
  BinaryResult best{w, b};
  double best_obj = p.objective(w, b);
  for (std::size_t t = 1; t <= cfg.max_iter; ++t) {
    best.iterations = t;
    for (std::size_t j = 0; j < d; ++j) gw[j] = p.lambda * w[j];
    double gb = 0.0;
    for (std::size_t i = 0; i < p.set.vectors.size(); ++i) {
      const auto& x = p.set.vectors[i];
      if (p.sign[i] * (dot(w, x) + b) < 1.0) {
        const double c = p.weight[i] * p.sign[i] / n;
        for (std::size_t j = 0; j < d; ++j) gw[j] -= c * x[j];
        gb -= c;
      }
    }
    if (std::sqrt(dot(gw, gw) + gb * gb) <= cfg.tol) {
      best.converged = true;
      if (p.objective(w, b) <= best_obj) {
        best.w = w;
        best.b = b;
      }
      break;
    }
    const double step = kInitialStep / (1.0 + kInitialStep * p.lambda * static_cast<double>(t));
    for (std::size_t j = 0; j < d; ++j) w[j] -= step * gw[j];
    b -= step * gb;
    const double obj = p.objective(w, b);
    if (obj < best_obj) {
      best_obj = obj;
      best.w = w;
      best.b = b;
    }
  }
  return best;
}

std::vector<double> class_weights(const std::vector<int>& labels, const std::vector<int>& classes, bool balanced) {
  std::vector<double> out(classes.size(), 1.0);
  if (!balanced) return out;
  for (std::size_t k = 0; k < classes.size(); ++k) {
    const auto count = static_cast<double>(std::count(labels.begin(), labels.end(), classes[k]));
    out[k] = static_cast<double>(labels.size()) / (static_cast<double>(classes.size()) * count);
  }
  return out;
}

std::size_t class_index(const std::vector<int>& classes, int label) {
  const auto it = std::lower_bound(classes.begin(), classes.end(), label);
  if (it == classes.end() || *it != label) return classes.size();
  return static_cast<std::size_t>(it - classes.begin());
}

std::vector<int> sorted_classes(const std::vector<int>& labels) {
  std::vector<int> c(labels);
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  return c;
}

Binary binary_problem(const LabeledVectorSet& set, const LinearClassifier& clf, std::size_t k) {
  Binary p{set, {}, {}, 1.0 / (clf.config.C * static_cast<double>(set.vectors.size()))};
  for (int y : set.labels) {
    p.sign.push_back(y == clf.classes[k] ? 1.0 : -1.0);
    const std::size_t idx = class_index(clf.classes, y);
    p.weight.push_back(idx < clf.classes.size() ? clf.class_weights[idx] : 1.0);
  }
  return p;
}

}  // namespace

LabeledVectorSet prepare(const Matrix& vectors, const std::vector<int>& labels, const std::string& language,
                         const std::vector<double>* fit_mean) {
  if (vectors.empty()) throw InputError("cannot prepare an empty vector set");
  if (labels.size() != vectors.size()) {
    throw InputError(std::to_string(vectors.size()) + " vectors but " + std::to_string(labels.size()) + " labels");
  }
  const std::size_t d = vectors[0].size();
  for (const auto& v : vectors) {
    if (v.size() != d) {
      throw DimensionError("vector of width " + std::to_string(v.size()) + " in a set of width " + std::to_string(d));
    }
  }
  LabeledVectorSet s;
  s.labels = labels;
  s.language = language;
  if (fit_mean) {
    if (fit_mean->size() != d) {
      throw DimensionError("centring vector of width " + std::to_string(fit_mean->size()) + " for vectors of width " +
                           std::to_string(d));
    }
    s.mean = *fit_mean;
  } else {
    s.mean.assign(d, 0.0);
    for (const auto& v : vectors)
      for (std::size_t j = 0; j < d; ++j) s.mean[j] += v[j];
    for (double& m : s.mean) m /= static_cast<double>(vectors.size());
    s.mean_fitted_here = true;
  }
  for (const auto& v : vectors) {
    std::vector<double> c(d);
    for (std::size_t j = 0; j < d; ++j) c[j] = v[j] - s.mean[j];
    const double norm = std::sqrt(dot(c, c));
    s.zero_rows.push_back(norm == 0.0);
    if (norm > 0.0)
      for (double& x : c) x /= norm;
    s.vectors.push_back(std::move(c));
  }
  return s;
}

std::vector<double> LinearClassifier::decision(const std::vector<double>& x) const {
  std::vector<double> out(classes.size());
  for (std::size_t k = 0; k < classes.size(); ++k) out[k] = dot(weights[k], x) + bias[k];
  return out;
}

int LinearClassifier::predict(const std::vector<double>& x) const {
  const auto s = decision(x);
  return classes[static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin())];
}

LinearClassifier train_classifier(const LabeledVectorSet& set, const ClassifierConfig& config) {
  if (set.vectors.empty()) throw InputError("cannot train a classifier on an empty set");
  LinearClassifier clf;
  clf.config = config;
  clf.classes = sorted_classes(set.labels);
  if (clf.classes.size() < 2) throw InputError("classifier needs at least two classes, got " +
                                               std::to_string(clf.classes.size()));
  clf.class_weights = class_weights(set.labels, clf.classes, config.balanced);
  clf.converged = true;
  for (std::size_t k = 0; k < clf.classes.size(); ++k) {
    const BinaryResult r = train_binary(binary_problem(set, clf, k), config);
    clf.weights.push_back(r.w);
    clf.bias.push_back(r.b);
    clf.iterations = std::max(clf.iterations, r.iterations);
    clf.converged = clf.converged && r.converged;
  }
  return clf;
}

double classifier_objective(const LinearClassifier& clf, const LabeledVectorSet& set) {
  double total = 0.0;
  for (std::size_t k = 0; k < clf.classes.size(); ++k) {
    total += binary_problem(set, clf, k).objective(clf.weights[k], clf.bias[k]);
  }
  return total / static_cast<double>(clf.classes.size());
}

double accuracy(const LinearClassifier& clf, const LabeledVectorSet& set) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < set.vectors.size(); ++i) hits += clf.predict(set.vectors[i]) == set.labels[i];
  return static_cast<double>(hits) / static_cast<double>(set.vectors.size());
}

AccuracyReport cross_lingual_eval(const LabeledVectorSet& train, const LabeledVectorSet& test,
                                  const ClassifierConfig& config) {
  if (train.dim() != test.dim()) {
    throw DimensionError("training vectors have width " + std::to_string(train.dim()) + ", test vectors " +
                         std::to_string(test.dim()) + " (inconsistent variants?)");
  }
  if (test.mean != train.mean) throw ContractError("test set must be centred with the training-language mean");
  const LinearClassifier clf = train_classifier(train, config);
  AccuracyReport r;
  r.train_language = train.language;
  r.test_language = test.language;
  r.classes = clf.classes;
  r.converged = clf.converged;
  r.test_size = test.vectors.size();
  r.train_accuracy = accuracy(clf, train);
  const std::size_t K = clf.classes.size();
  r.confusion.assign(K, std::vector<std::size_t>(K, 0));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < test.vectors.size(); ++i) {
    const int pred = clf.predict(test.vectors[i]);
    hits += pred == test.labels[i];
    const std::size_t t = class_index(clf.classes, test.labels[i]);
    if (t < K) ++r.confusion[t][class_index(clf.classes, pred)];
  }
  r.accuracy = static_cast<double>(hits) / static_cast<double>(test.vectors.size());
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t n = std::accumulate(r.confusion[k].begin(), r.confusion[k].end(), std::size_t{0});
    r.per_class_recall.push_back(n ? static_cast<double>(r.confusion[k][k]) / static_cast<double>(n) : 0.0);
  }
  return r;
}

TfidfModel TfidfModel::fit(const std::vector<std::string>& docs, std::size_t top_k) {
  if (top_k < 1) throw InputError("top_k must be at least 1");
  if (docs.empty()) throw InputError("cannot fit TF-IDF on no documents");
  std::map<std::string, std::size_t> freq, df;
  for (const auto& doc : docs) {
    auto words = split_words(doc);
    for (const auto& w : words) ++freq[w];
    std::sort(words.begin(), words.end());
    words.erase(std::unique(words.begin(), words.end()), words.end());
    for (const auto& w : words) ++df[w];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  TfidfModel m;
  const double n = static_cast<double>(docs.size());
  for (std::size_t i = 0; i < std::min(top_k, ranked.size()); ++i) {
    m.features_.push_back(ranked[i].first);
    m.idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(df[ranked[i].first]))) + 1.0);
  }
  return m;
}

std::vector<double> TfidfModel::transform(const std::string& doc) const {
  std::map<std::string, std::size_t> counts;
  for (const auto& w : split_words(doc)) ++counts[w];
  std::vector<double> v(features_.size(), 0.0);
  for (std::size_t j = 0; j < features_.size(); ++j) {
    const auto it = counts.find(features_[j]);
    if (it != counts.end()) v[j] = static_cast<double>(it->second) * idf_[j];
  }
  return v;
}

AccuracyReport tfidf_baseline(const std::vector<std::string>& train_docs, const std::vector<int>& train_labels,
                              const std::vector<std::string>& test_docs, const std::vector<int>& test_labels,
                              std::size_t top_k, const ClassifierConfig& config) {
  const TfidfModel model = TfidfModel::fit(train_docs, top_k);
  Matrix train, test;
  for (const auto& d : train_docs) train.push_back(model.transform(d));
  for (const auto& d : test_docs) test.push_back(model.transform(d));
  const auto train_set = prepare(train, train_labels, "train");
  const auto test_set = prepare(test, test_labels, "test", &train_set.mean);
  return cross_lingual_eval(train_set, test_set, config);
}

std::string format_report(const AccuracyReport& r, const std::string& title, const std::string& config_echo) {
  std::ostringstream out;
  char buf[64];
  out << "# " << title << "\n";
  out << "train_language\t" << r.train_language << "\ntest_language\t" << r.test_language << "\n";
  std::snprintf(buf, sizeof buf, "%.6f", r.accuracy);
  out << "accuracy\t" << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.6f", r.train_accuracy);
  out << "train_accuracy\t" << buf << "\n";
  out << "test_size\t" << r.test_size << "\nconverged\t" << (r.converged ? "true" : "false") << "\n";
  for (std::size_t k = 0; k < r.classes.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.6f", r.per_class_recall[k]);
    out << "recall[" << r.classes[k] << "]\t" << buf << "\n";
  }
  out << "confusion (rows: true, columns: predicted)\n";
  for (std::size_t k = 0; k < r.classes.size(); ++k) {
    out << r.classes[k];
    for (std::size_t c : r.confusion[k]) out << '\t' << c;
    out << "\n";
  }
  out << "# config\n" << config_echo;
  if (!config_echo.empty() && config_echo.back() != '\n') out << "\n";
  return out.str();
}

}  // namespace xdv

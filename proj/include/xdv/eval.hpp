// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace xdv {

using Matrix = std::vector<std::vector<double>>;

/// Vectors ready for classification: centred with `mean`, then scaled to unit norm.
struct LabeledVectorSet {
  Matrix vectors;
  std::vector<int> labels;
  std::string language;
  std::vector<double> mean;       // centring vector actually used
  bool mean_fitted_here = false;  // false when it came from another set
  std::vector<bool> zero_rows;    // rows left at zero after centring
  std::size_t dim() const { return mean.size(); }
};

/// Centres with `fit_mean` when given, else with this set's own mean, then
/// L2-normalises each row. DimensionError on inconsistent widths; InputError
/// on an empty set or a label count that differs from the row count.
LabeledVectorSet prepare(const Matrix& vectors, const std::vector<int>& labels, const std::string& language,
                         const std::vector<double>* fit_mean = nullptr);

struct ClassifierConfig {
  double C = 1.0;  // L2 strength is 1 / (C n)
  std::size_t max_iter = 5000;
  double tol = 1e-8;  // stationarity threshold on the subgradient norm
  bool balanced = true;
};

/// One-vs-rest linear classifier with hinge loss.
struct LinearClassifier {
  std::vector<int> classes;  // sorted labels
  Matrix weights;            // one row per class
  std::vector<double> bias;
  std::vector<double> class_weights;
  std::size_t iterations = 0;  // most iterations used by any binary problem
  bool converged = false;      // every binary problem met the stationarity test
  ClassifierConfig config;

  std::vector<double> decision(const std::vector<double>& x) const;
  int predict(const std::vector<double>& x) const;
};

/// Per class c: minimise (lambda/2)|w|^2 + (1/n) sum_i weight(y_i) max(0, 1 - s_i (w.x_i + b))
/// with s_i = +1 for class c and -1 otherwise, by full-batch subgradient
/// descent from zero, keeping the best iterate. Balanced weights are
/// n / (K count(y)). InputError with fewer than two classes.
LinearClassifier train_classifier(const LabeledVectorSet& set, const ClassifierConfig& config = {});

/// Mean of the binary objectives of `clf` on `set` (the quantity minimised above).
double classifier_objective(const LinearClassifier& clf, const LabeledVectorSet& set);

struct AccuracyReport {
  std::string train_language;
  std::string test_language;
  double accuracy = 0.0;
  double train_accuracy = 0.0;
  std::vector<int> classes;
  std::vector<double> per_class_recall;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::size_t test_size = 0;
  bool converged = false;
};

double accuracy(const LinearClassifier& clf, const LabeledVectorSet& set);

/// Trains on `train` and scores `test`. DimensionError when widths differ;
/// ContractError when `test` was not centred with the training mean.
AccuracyReport cross_lingual_eval(const LabeledVectorSet& train, const LabeledVectorSet& test,
                                  const ClassifierConfig& config = {});

/// TF-IDF over the `top_k` most frequent training words (ties by word), with
/// idf = ln((1 + n) / (1 + df)) + 1 and raw term counts.
class TfidfModel {
 public:
  /// InputError when top_k < 1 or `docs` is empty.
  static TfidfModel fit(const std::vector<std::string>& docs, std::size_t top_k);
  std::vector<double> transform(const std::string& doc) const;
  const std::vector<std::string>& features() const { return features_; }
  const std::vector<double>& idf() const { return idf_; }

 private:
  std::vector<std::string> features_;
  std::vector<double> idf_;
};

/// The translation baseline: TF-IDF on training documents and on (already
/// translated) test documents of the same language, then the usual protocol.
AccuracyReport tfidf_baseline(const std::vector<std::string>& train_docs, const std::vector<int>& train_labels,
                              const std::vector<std::string>& test_docs, const std::vector<int>& test_labels,
                              std::size_t top_k, const ClassifierConfig& config = {});

/// Plain-text report: accuracy, per-class recall, confusion matrix, then `config_echo`.
std::string format_report(const AccuracyReport& report, const std::string& title, const std::string& config_echo);

}  // namespace xdv

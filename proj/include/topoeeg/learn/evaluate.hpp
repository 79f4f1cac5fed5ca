#pragma once

// Subject-wise evaluation protocol: seeded shuffle, 80/20 hold-out split and
// k-fold cross-validation (inside the training portion by default, or over
// all examples).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "topoeeg/learn/classifier.hpp"
#include "topoeeg/random.hpp"

namespace topoeeg {

enum class Protocol { split_then_cv, cv_all };

inline std::string_view protocol_name(Protocol p) noexcept {
  return p == Protocol::split_then_cv ? "split_80_20_then_10fold_cv" : "10fold_cv_all";
}

inline Protocol parse_protocol(std::string_view s) {
  if (s == "split_80_20_then_10fold_cv" || s == "split_then_cv") return Protocol::split_then_cv;
  if (s == "10fold_cv_all" || s == "cv_all") return Protocol::cv_all;
  throw ParameterError("unknown protocol '" + std::string(s) + "'");
}

struct ProtocolOptions {
  Protocol protocol = Protocol::split_then_cv;
  std::size_t folds = 10;
  double test_fraction = 0.2;
};

using ConfusionMatrix = std::vector<std::vector<std::size_t>>;  // [true][predicted]

struct ClassMetrics {
  std::size_t support = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct ClassificationSummary {
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  std::vector<ClassMetrics> per_class;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
};

/// Metrics from a confusion matrix. Macro averages run over the classes that
/// occur as a true or predicted label; precision of a never-predicted class
/// is 0.
inline ClassificationSummary summarize(const ConfusionMatrix& cm) {
  ClassificationSummary s;
  s.confusion = cm;
  const std::size_t C = cm.size();
  std::size_t total = 0, trace = 0;
  std::vector<std::size_t> predicted(C, 0);
  for (std::size_t t = 0; t < C; ++t)
    for (std::size_t p = 0; p < C; ++p) {
      total += cm[t][p];
      predicted[p] += cm[t][p];
      if (t == p) trace += cm[t][p];
    }
  s.accuracy = total ? double(trace) / double(total) : 0.0;
  s.per_class.resize(C);
  std::size_t present = 0;
  for (std::size_t c = 0; c < C; ++c) {
    auto& m = s.per_class[c];
    m.support = std::accumulate(cm[c].begin(), cm[c].end(), std::size_t{0});
    m.precision = predicted[c] ? double(cm[c][c]) / double(predicted[c]) : 0.0;
    m.recall = m.support ? double(cm[c][c]) / double(m.support) : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    if (m.support == 0 && predicted[c] == 0) continue;
    ++present;
    s.macro_precision += m.precision;
    s.macro_recall += m.recall;
    s.macro_f1 += m.f1;
  }
  if (present) {
    s.macro_precision /= double(present);
    s.macro_recall /= double(present);
    s.macro_f1 /= double(present);
  }
  return s;
}

struct EvalReport {
  std::string protocol;
  std::string classifier;
  std::uint64_t seed = 0;
  int num_classes = 0;
  std::size_t examples = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::vector<double> fold_accuracies;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  ClassificationSummary cv;                     // pooled over folds
  std::optional<ClassificationSummary> holdout;  // split_then_cv only
  std::vector<std::string> warnings;
};

inline double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

/// Population standard deviation.
inline double std_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / double(v.size()));
}

/// Seeded permutation of 0..n-1 followed by the hold-out split. Returns the
/// training indices first, the test indices second.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_split(std::size_t n, double test_fraction,
                                                                                   std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, 0x5u));
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = std::size_t(std::floor(test_fraction * double(n) + 0.5));
  std::vector<std::size_t> test(order.begin(), order.begin() + std::ptrdiff_t(n_test));
  std::vector<std::size_t> train(order.begin() + std::ptrdiff_t(n_test), order.end());
  return {train, test};
}

namespace detail {

// Trains on `train` and returns predictions for `test`. A single-class
// training set degenerates to a constant predictor and records a warning.
inline std::vector<int> fit_and_predict(const ClassifierSpec& spec, const Examples& data,
                                        const std::vector<std::size_t>& train, const std::vector<std::size_t>& test,
                                        std::uint64_t seed, int num_classes, std::vector<std::string>& warnings,
                                        const std::string& where) {
  Examples tr;
  tr.reserve(train.size());
  for (auto i : train) tr.push_back(data[i]);
  std::vector<int> out;
  out.reserve(test.size());
  if (distinct_labels(tr) < 2) {
    warnings.push_back(where + ": training portion holds a single class; predicting it for every example");
    for (std::size_t i = 0; i < test.size(); ++i) out.push_back(tr.front().label);
    return out;
  }
  const auto model = fit(spec, tr, seed, num_classes);
  for (auto i : test) out.push_back(predict(model, data[i].features));
  return out;
}

}  // namespace detail

inline EvalReport evaluate(const Examples& data, const ProtocolOptions& opt, const ClassifierSpec& spec,
                           std::uint64_t seed, int num_classes = 0) {
  check_examples(data, "evaluate");
  if (opt.folds < 2) throw ParameterError("evaluate: need at least 2 folds");
  if (!(opt.test_fraction > 0.0 && opt.test_fraction < 1.0))
    throw ParameterError("evaluate: test fraction must be in (0, 1)");

  EvalReport r;
  r.protocol = std::string(protocol_name(opt.protocol));
  r.classifier = std::string(classifier_name(spec.kind));
  r.seed = seed;
  r.num_classes = std::max(num_classes, class_count(data));
  r.examples = data.size();
  const auto C = std::size_t(r.num_classes);

  std::vector<std::size_t> pool, test;
  if (opt.protocol == Protocol::split_then_cv) {
    std::tie(pool, test) = holdout_split(data.size(), opt.test_fraction, seed);
  } else {
    std::tie(pool, test) = holdout_split(data.size(), 0.0, seed);
  }
  r.train_size = pool.size();
  r.test_size = test.size();

  std::size_t folds = opt.folds;
  if (pool.size() < folds) {
    r.warnings.push_back("fewer examples than folds; using " + std::to_string(pool.size()) + " folds");
    folds = pool.size();
  }
  if (folds < 2) throw ParameterError("evaluate: too few examples for cross-validation");

  ConfusionMatrix pooled(C, std::vector<std::size_t>(C, 0));
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t lo = f * pool.size() / folds, hi = (f + 1) * pool.size() / folds;
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < pool.size(); ++i) (i >= lo && i < hi ? te : tr).push_back(pool[i]);
    const auto pred = detail::fit_and_predict(spec, data, tr, te, derive_seed(seed, 0xf01du, f), r.num_classes,
                                              r.warnings, "fold " + std::to_string(f));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < te.size(); ++i) {
      const auto t = std::size_t(data[te[i]].label);
      ++pooled[t][std::size_t(pred[i])];
      correct += (int(t) == pred[i]);
    }
    r.fold_accuracies.push_back(te.empty() ? 0.0 : double(correct) / double(te.size()));
  }
  r.mean_accuracy = mean_of(r.fold_accuracies);
  r.std_accuracy = std_of(r.fold_accuracies);
  r.cv = summarize(pooled);

  if (opt.protocol == Protocol::split_then_cv && !test.empty()) {
    ConfusionMatrix cm(C, std::vector<std::size_t>(C, 0));
    const auto pred = detail::fit_and_predict(spec, data, pool, test, derive_seed(seed, 0x401du), r.num_classes,
                                              r.warnings, "hold-out");
    for (std::size_t i = 0; i < test.size(); ++i) ++cm[std::size_t(data[test[i]].label)][std::size_t(pred[i])];
    r.holdout = summarize(cm);
  }
  return r;
}

}  // namespace topoeeg

#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "topoeeg/errors.hpp"
#include "topoeeg/learn/dataset.hpp"

namespace topoeeg {

inline constexpr double kGnbVarianceFloor = 1e-9;

struct GnbModel {
  int num_classes = 0;
  std::size_t num_features = 0;
  std::vector<double> log_prior;  // per class; -inf for absent classes
  std::vector<double> mean;       // class-major, num_classes * num_features
  std::vector<double> var;
};

inline GnbModel gnb_fit(const Examples& train, int num_classes = 0) {
  const auto width = check_examples(train, "gnb_fit");
  GnbModel m;
  m.num_classes = std::max(num_classes, class_count(train));
  m.num_features = width;
  const auto C = std::size_t(m.num_classes);
  std::vector<double> count(C, 0.0);
  m.mean.assign(C * width, 0.0);
  m.var.assign(C * width, 0.0);
  for (const auto& e : train) {
    const auto c = std::size_t(e.label);
    count[c] += 1.0;
    for (std::size_t f = 0; f < width; ++f) m.mean[c * width + f] += e.features[f];
  }
  for (std::size_t c = 0; c < C; ++c)
    if (count[c] > 0)
      for (std::size_t f = 0; f < width; ++f) m.mean[c * width + f] /= count[c];
  for (const auto& e : train) {
    const auto c = std::size_t(e.label);
    for (std::size_t f = 0; f < width; ++f) {
      const double d = e.features[f] - m.mean[c * width + f];
      m.var[c * width + f] += d * d;
    }
  }
  m.log_prior.assign(C, -std::numeric_limits<double>::infinity());
  for (std::size_t c = 0; c < C; ++c) {
    if (count[c] > 0) m.log_prior[c] = std::log(count[c] / double(train.size()));
    for (std::size_t f = 0; f < width; ++f) {
      auto& v = m.var[c * width + f];
      v = std::max(count[c] > 0 ? v / count[c] : 0.0, kGnbVarianceFloor);
    }
  }
  return m;
}

/// Per-class log prior plus summed Gaussian log-likelihoods.
inline std::vector<double> gnb_log_scores(const GnbModel& m, std::span<const double> x) {
  if (x.size() != m.num_features) throw DataError("gnb_predict: feature length mismatch");
  std::vector<double> s(std::size_t(m.num_classes));
  const auto W = m.num_features;
  for (std::size_t c = 0; c < s.size(); ++c) {
    double acc = m.log_prior[c];
    for (std::size_t f = 0; f < W; ++f) {
      const double v = m.var[c * W + f];
      const double d = x[f] - m.mean[c * W + f];
      acc += -0.5 * std::log(2.0 * std::numbers::pi * v) - d * d / (2.0 * v);
    }
    s[c] = acc;
  }
  return s;
}

inline int gnb_predict(const GnbModel& m, std::span<const double> x) {
  const auto s = gnb_log_scores(m, x);
  int best = 0;
  for (std::size_t c = 1; c < s.size(); ++c)
    if (s[c] > s[std::size_t(best)]) best = int(c);
  return best;
}

}  // namespace topoeeg

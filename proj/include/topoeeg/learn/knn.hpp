#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "topoeeg/errors.hpp"
#include "topoeeg/learn/dataset.hpp"
#include "topoeeg/point_cloud.hpp"

namespace topoeeg {

struct KnnModel {
  Examples train;
  std::size_t k = 5;
  int num_classes = 0;
};

inline KnnModel knn_fit(Examples train, std::size_t k = 5, int num_classes = 0) {
  check_examples(train, "knn_fit");
  if (k == 0) throw ParameterError("knn: k must be >= 1");
  const int c = std::max(num_classes, class_count(train));
  return {std::move(train), k, c};
}

/// Majority label among the k nearest (Euclidean) training examples. Equal
/// distances are broken toward the smaller label, vote ties likewise.
inline int knn_predict(const KnnModel& model, std::span<const double> query) {
  const auto& tr = model.train;
  if (!tr.empty() && query.size() != tr.front().features.size()) throw DataError("knn_predict: feature length mismatch");
  std::vector<std::pair<double, int>> dist;
  dist.reserve(tr.size());
  for (const auto& e : tr) dist.emplace_back(euclidean(e.features, query), e.label);
  const std::size_t k = std::min(model.k, dist.size());
  std::partial_sort(dist.begin(), dist.begin() + std::ptrdiff_t(k), dist.end());
  std::vector<std::size_t> votes(std::size_t(model.num_classes), 0);
  for (std::size_t i = 0; i < k; ++i) ++votes[std::size_t(dist[i].second)];
  int best = 0;
  for (std::size_t c = 1; c < votes.size(); ++c)
    if (votes[c] > votes[std::size_t(best)]) best = int(c);
  return best;
}

}  // namespace topoeeg

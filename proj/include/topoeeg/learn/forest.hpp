#pragma once

// Random forest of CART trees with Gini splits.
//
// Bootstrap multiplicities are Poisson(1) draws seeded from the forest seed,
// the tree index and a hash of the example's content, so the fitted forest
// does not depend on the order of the training set.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "topoeeg/errors.hpp"
#include "topoeeg/learn/dataset.hpp"
#include "topoeeg/random.hpp"

namespace topoeeg {

struct ForestParams {
  std::size_t trees = 100;
  std::size_t max_depth = 0;     // 0 = unlimited
  std::size_t min_leaf = 1;
  std::size_t max_features = 0;  // 0 = floor(sqrt(D))
  bool bootstrap = true;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::vector<double> histogram;  // class weights, leaves only
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  const TreeNode& leaf_for(std::span<const double> x) const {
    std::size_t i = 0;
    while (nodes[i].feature >= 0) i = std::size_t(x[std::size_t(nodes[i].feature)] <= nodes[i].threshold ? nodes[i].left : nodes[i].right);
    return nodes[i];
  }
};

struct ForestModel {
  std::vector<DecisionTree> trees;
  ForestParams params;
  std::uint64_t seed = 0;
  int num_classes = 0;
  std::size_t num_features = 0;
};

struct Prediction {
  int label = 0;
  std::vector<double> probabilities;
};

inline int argmax_lowest(std::span<const double> v) {
  int best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[std::size_t(best)]) best = int(i);
  return best;
}

namespace detail {

inline std::uint64_t content_hash(const LabeledExample& e) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  for (double v : e.features) feed(std::bit_cast<std::uint64_t>(v == 0.0 ? 0.0 : v));
  feed(std::uint64_t(std::int64_t(e.label)));
  return h;
}

class TreeBuilder {
 public:
  TreeBuilder(const Examples& data, const std::vector<double>& weights, int classes, const ForestParams& p,
              std::uint64_t seed)
      : data_(data), w_(weights), classes_(std::size_t(classes)), p_(p), seed_(seed) {
    width_ = data.front().features.size();
    mtry_ = p.max_features ? std::min(p.max_features, width_)
                           : std::max<std::size_t>(1, std::size_t(std::floor(std::sqrt(double(width_)))));
  }

  DecisionTree build() {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < data_.size(); ++i)
      if (w_[i] > 0.0) idx.push_back(i);
    tree_.nodes.clear();
    grow(idx, 0);
    return std::move(tree_);
  }

 private:
  std::vector<double> histogram(const std::vector<std::size_t>& idx) const {
    std::vector<double> h(classes_, 0.0);
    for (auto i : idx) h[std::size_t(data_[i].label)] += w_[i];
    return h;
  }

  static double gini_sum(const std::vector<double>& h, double total) {
    if (total <= 0.0) return 0.0;
    double s = 0.0;
    for (double c : h) s += c * c;
    return total - s / total;  // total * gini impurity
  }

  std::int32_t grow(const std::vector<std::size_t>& idx, std::size_t depth) {
    const auto node_id = std::int32_t(tree_.nodes.size());
    tree_.nodes.emplace_back();
    auto hist = histogram(idx);
    const double total = std::accumulate(hist.begin(), hist.end(), 0.0);
    const double parent = gini_sum(hist, total);
    const bool depth_capped = p_.max_depth != 0 && depth >= p_.max_depth;
    if (depth_capped || parent <= 0.0 || total < 2.0 * double(p_.min_leaf)) {
      tree_.nodes[std::size_t(node_id)].histogram = std::move(hist);
      return node_id;
    }

    Rng rng(derive_seed(seed_, std::uint64_t(node_id)));
    std::vector<std::size_t> features(width_);
    std::iota(features.begin(), features.end(), std::size_t{0});
    std::shuffle(features.begin(), features.end(), rng);

    double best_gain = 0.0;
    std::int32_t best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::size_t> order(idx);
    for (std::size_t fi = 0; fi < features.size(); ++fi) {
      if (fi >= mtry_ && best_feature >= 0) break;
      const auto f = features[fi];
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) { return data_[a].features[f] < data_[b].features[f]; });
      std::vector<double> left(classes_, 0.0), right = hist;
      double lw = 0.0;
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        const auto i = order[k];
        left[std::size_t(data_[i].label)] += w_[i];
        right[std::size_t(data_[i].label)] -= w_[i];
        lw += w_[i];
        const double a = data_[i].features[f], b = data_[order[k + 1]].features[f];
        if (!(a < b)) continue;
        const double rw = total - lw;
        if (lw < double(p_.min_leaf) || rw < double(p_.min_leaf)) continue;
        const double gain = parent - gini_sum(left, lw) - gini_sum(right, rw);
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best_feature = std::int32_t(f);
          double mid = 0.5 * (a + b);
          if (!(mid < b)) mid = a;
          best_threshold = mid;
        }
      }
    }
    if (best_feature < 0) {
      tree_.nodes[std::size_t(node_id)].histogram = std::move(hist);
      return node_id;
    }

    std::vector<std::size_t> li, ri;
    for (auto i : idx) (data_[i].features[std::size_t(best_feature)] <= best_threshold ? li : ri).push_back(i);
    const auto l = grow(li, depth + 1);
    const auto r = grow(ri, depth + 1);
    auto& node = tree_.nodes[std::size_t(node_id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return node_id;
  }

  const Examples& data_;
  const std::vector<double>& w_;
  std::size_t classes_;
  ForestParams p_;
  std::uint64_t seed_;
  std::size_t width_ = 0;
  std::size_t mtry_ = 1;
  DecisionTree tree_;
};

}  // namespace detail

inline ForestModel rf_train(const Examples& data, const ForestParams& params, std::uint64_t seed,
                            int num_classes = 0) {
  const auto width = check_examples(data, "rf_train");
  if (distinct_labels(data) < 2) throw DegenerateInputError("rf_train: training data holds a single class");
  if (params.trees == 0) throw ParameterError("rf_train: need at least one tree");
  if (params.min_leaf == 0) throw ParameterError("rf_train: min_leaf must be >= 1");

  ForestModel model;
  model.params = params;
  model.seed = seed;
  model.num_classes = std::max(num_classes, class_count(data));
  model.num_features = width;

  std::vector<std::uint64_t> hashes(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) hashes[i] = detail::content_hash(data[i]);

  std::vector<double> weights(data.size(), 1.0);
  for (std::size_t t = 0; t < params.trees; ++t) {
    const auto tree_seed = derive_seed(seed, 0x7265u, t);
    if (params.bootstrap) {
      for (std::size_t i = 0; i < data.size(); ++i) {
        Rng rng(derive_seed(tree_seed, hashes[i]));
        std::poisson_distribution<int> draw(1.0);
        weights[i] = double(draw(rng));
      }
      if (std::all_of(weights.begin(), weights.end(), [](double w) { return w == 0.0; })) weights.assign(data.size(), 1.0);
    }
    detail::TreeBuilder builder(data, weights, model.num_classes, params, tree_seed);
    model.trees.push_back(builder.build());
  }
  return model;
}

/// Mean of the normalized leaf histograms; label is the argmax (ties go to
/// the lowest class id).
inline Prediction rf_predict(const ForestModel& model, std::span<const double> x) {
  if (x.size() != model.num_features) throw DataError("rf_predict: feature length does not match the model");
  Prediction p;
  p.probabilities.assign(std::size_t(model.num_classes), 0.0);
  for (const auto& tree : model.trees) {
    const auto& h = tree.leaf_for(x).histogram;
    const double s = std::accumulate(h.begin(), h.end(), 0.0);
    if (s <= 0.0) continue;
    for (std::size_t c = 0; c < h.size(); ++c) p.probabilities[c] += h[c] / s;
  }
  const double total = std::accumulate(p.probabilities.begin(), p.probabilities.end(), 0.0);
  if (total > 0.0)
    for (auto& v : p.probabilities) v /= total;
  p.label = argmax_lowest(p.probabilities);
  return p;
}

}  // namespace topoeeg

#pragma once

#include <cmath>
#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "topoeeg/errors.hpp"

namespace topoeeg {

struct ExampleMeta {
  std::string subject;
  std::string trial;
  std::size_t segment_index = 0;
};

struct LabeledExample {
  std::vector<double> features;
  int label = 0;
  ExampleMeta meta;
};

using Examples = std::vector<LabeledExample>;

/// Checks uniform feature width, finite values and nonnegative labels.
/// Returns the feature width.
inline std::size_t check_examples(const Examples& data, const char* who) {
  if (data.empty()) throw ParameterError(std::string(who) + ": no examples");
  const std::size_t width = data.front().features.size();
  for (const auto& e : data) {
    if (e.features.size() != width) throw DataError(std::string(who) + ": feature length differs between examples");
    if (e.label < 0) throw DataError(std::string(who) + ": labels must be nonnegative class ids");
    for (double v : e.features)
      if (std::isnan(v)) throw ParameterError(std::string(who) + ": NaN feature");
  }
  return width;
}

inline int class_count(const Examples& data) {
  int c = 0;
  for (const auto& e : data) c = std::max(c, e.label + 1);
  return c;
}

inline std::size_t distinct_labels(const Examples& data) {
  std::set<int> s;
  for (const auto& e : data) s.insert(e.label);
  return s.size();
}

}  // namespace topoeeg

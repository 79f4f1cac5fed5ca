#pragma once

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "topoeeg/errors.hpp"

namespace topoeeg {

/// Per-dimension low/high: strictly greater than the threshold is high (1).
inline std::vector<int> label_binarize(std::span<const double> scores, double threshold) {
  std::vector<int> out;
  out.reserve(scores.size());
  for (double s : scores) {
    if (!std::isfinite(s)) throw DataError("label_binarize: non-finite score");
    out.push_back(s > threshold ? 1 : 0);
  }
  return out;
}

/// Composite class id: highs bit-packed with the first score as the most
/// significant bit, e.g. (V, A, D) = (high, low, high) -> 0b101 = 5.
inline int composite_label(std::span<const double> scores, double threshold) {
  if (scores.empty() || scores.size() > 16) throw ParameterError("composite_label: need 1..16 scores");
  int id = 0;
  for (int bit : label_binarize(scores, threshold)) id = (id << 1) | bit;
  return id;
}

/// Name of a composite id, e.g. composite_name(5, "VAD") == "HVLAHD".
inline std::string composite_name(int id, std::string_view letters) {
  const auto n = letters.size();
  if (n == 0 || id < 0 || id >= (1 << n)) throw ParameterError("composite_name: id out of range");
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    s += ((id >> (n - 1 - i)) & 1) ? 'H' : 'L';
    s += letters[i];
  }
  return s;
}

}  // namespace topoeeg

#pragma once

// Reference persistence: the textbook left-to-right reduction of the full
// boundary matrix with dense Z/2 columns. No clearing, no union-find, no
// pivot table. Used as an oracle for `persistence` on small inputs.

#include <algorithm>
#include <cstdint>
#include <map>
#include <vector>

#include "topoeeg/homology.hpp"

namespace topoeeg {

inline constexpr std::size_t kNaiveMaxPoints = 25;

inline PersistenceDiagram persistence_naive(const Filtration& filt, const HomologyDims& dims) {
  detail::require_valid_request(filt, dims);
  if (filt.point_count > kNaiveMaxPoints) throw ParameterError("persistence_naive: intended for at most 25 points");
  detail::check_filtration_order(filt);

  const auto& S = filt.simplices;
  const std::size_t m = S.size();
  const std::size_t words = (m + 63) / 64;

  std::map<std::vector<std::uint32_t>, std::size_t> index;
  for (std::size_t j = 0; j < m; ++j) index.emplace(std::vector<std::uint32_t>(S[j].verts().begin(), S[j].verts().end()), j);

  std::vector<std::vector<std::uint64_t>> col(m, std::vector<std::uint64_t>(words, 0));
  for (std::size_t j = 0; j < m; ++j) {
    if (S[j].count < 2) continue;
    for (std::size_t skip = 0; skip < S[j].count; ++skip) {
      std::vector<std::uint32_t> face;
      for (std::size_t i = 0; i < S[j].count; ++i)
        if (i != skip) face.push_back(S[j].vertices[i]);
      const auto it = index.find(face);
      if (it == index.end() || it->second >= j) throw InvariantError("persistence_naive: missing or misordered face");
      col[j][it->second / 64] |= std::uint64_t{1} << (it->second % 64);
    }
  }

  auto low = [&](std::size_t j) -> long {
    for (std::size_t w = words; w-- > 0;)
      if (col[j][w] != 0) return long(w * 64 + 63 - std::size_t(__builtin_clzll(col[j][w])));
    return -1;
  };

  std::vector<long> lows(m, -1);
  for (std::size_t j = 0; j < m; ++j) {
    lows[j] = low(j);
    bool changed = true;
    while (lows[j] >= 0 && changed) {
      changed = false;
      for (std::size_t p = 0; p < j; ++p) {
        if (lows[p] == lows[j]) {
          for (std::size_t w = 0; w < words; ++w) col[j][w] ^= col[p][w];
          lows[j] = low(j);
          changed = true;
          break;
        }
      }
    }
  }

  PersistenceDiagram dg;
  dg.threshold = filt.threshold;
  dg.point_count = filt.point_count;
  std::vector<bool> paired(m, false);
  for (std::size_t j = 0; j < m; ++j) {
    if (lows[j] < 0) continue;
    const auto i = std::size_t(lows[j]);
    paired[i] = paired[j] = true;
    const int d = S[i].dim();
    if (dims.contains(d)) detail::push_pair(dg, d, S[i].value, S[j].value, false);
  }
  for (std::size_t i = 0; i < m; ++i) {
    const int d = S[i].dim();
    if (paired[i] || lows[i] >= 0 || (d > 0 && d >= filt.max_dim) || !dims.contains(d)) continue;
    detail::push_pair(dg, d, S[i].value, filt.threshold, true);
  }
  dg.normalize();
  return dg;
}

}  // namespace topoeeg

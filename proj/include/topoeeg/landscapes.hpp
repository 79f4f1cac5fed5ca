#pragma once

// Persistence landscapes sampled on a uniform grid and the per-channel
// feature layout built from them.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "topoeeg/errors.hpp"
#include "topoeeg/homology.hpp"
#include "topoeeg/signals.hpp"

namespace topoeeg {

/// Tent over the bar [birth, death]: rises with slope 1 up to the midpoint,
/// falls with slope 1 to zero at death.
inline double tent(double birth, double death, double t) noexcept {
  const double mid = 0.5 * (birth + death);
  if (t >= birth && t <= mid) return t - birth;
  if (t > mid && t < death) return death - t;
  return 0.0;
}

struct Landscape {
  std::vector<double> grid;
  std::vector<double> values;
  int dim = 0;
  std::size_t k = 1;
};

/// grid[g] = g * t_max / (points - 1)
inline std::vector<double> landscape_grid(std::size_t points, double t_max) {
  if (points < 2) throw ParameterError("landscape: grid needs at least 2 points");
  if (!(t_max > 0.0)) throw ParameterError("landscape: t_max must be positive");
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i) g[i] = double(i) * t_max / double(points - 1);
  return g;
}

/// k-th largest tent value over the pairs of one dimension, at each grid point.
inline Landscape landscape(const PersistenceDiagram& dg, int dim, std::size_t k, std::size_t points, double t_max) {
  if (k < 1) throw ParameterError("landscape: k must be >= 1");
  if (dim < 0 || dim > kMaxHomologyDim) throw ParameterError("landscape: dim must be 0, 1 or 2");
  Landscape L;
  L.grid = landscape_grid(points, t_max);
  L.values.assign(points, 0.0);
  L.dim = dim;
  L.k = k;
  const auto& pairs = dg.pairs(dim);
  if (pairs.size() < k) return L;
  std::vector<double> vals(pairs.size());
  for (std::size_t g = 0; g < points; ++g) {
    for (std::size_t i = 0; i < pairs.size(); ++i) vals[i] = tent(pairs[i].birth, pairs[i].death, L.grid[g]);
    std::nth_element(vals.begin(), vals.begin() + std::ptrdiff_t(k - 1), vals.end(), std::greater<>());
    L.values[g] = vals[k - 1];
  }
  return L;
}

inline constexpr std::size_t kDefaultGridPoints = 50;

/// Pointwise mean of the k = 1 landscapes of H0, H1 and H2 on a shared grid.
inline std::vector<double> band_features(const PersistenceDiagram& dg, std::size_t points, double t_max) {
  std::vector<double> out(points, 0.0);
  for (int d = 0; d <= kMaxHomologyDim; ++d) {
    const auto L = landscape(dg, d, 1, points, t_max);
    for (std::size_t g = 0; g < points; ++g) out[g] += L.values[g];
  }
  for (auto& v : out) v /= 3.0;
  return out;
}

struct FeatureVector {
  std::vector<double> values;
  std::vector<std::string> schema;  // "<channel>:<band>:<grid index>"
};

using ChannelBandKey = std::pair<std::string, Band>;

/// Concatenates per-(channel, band) vectors in channel order, then band
/// order, then grid order.
inline FeatureVector stack_features(const std::map<ChannelBandKey, std::vector<double>>& cells,
                                    const std::vector<std::string>& channel_order,
                                    const std::vector<Band>& band_order = {kRhythmBands.begin(), kRhythmBands.end()}) {
  FeatureVector fv;
  std::size_t width = 0;
  for (const auto& ch : channel_order)
    for (Band b : band_order) {
      const auto it = cells.find({ch, b});
      if (it == cells.end())
        throw DataError("stack_features: missing cell for channel " + ch + " band " + std::string(band_name(b)));
      if (width == 0) width = it->second.size();
      if (it->second.size() != width) throw DataError("stack_features: cells have unequal width");
      for (std::size_t g = 0; g < width; ++g) {
        fv.values.push_back(it->second[g]);
        fv.schema.push_back(ch + ":" + std::string(band_name(b)) + ":" + std::to_string(g));
      }
    }
  return fv;
}

}  // namespace topoeeg

#pragma once

// Delay-coordinate phase-space reconstruction and the two classical
// parameter diagnostics: average mutual information for the lag and false
// nearest neighbours for the dimension.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "topoeeg/errors.hpp"
#include "topoeeg/point_cloud.hpp"
#include "topoeeg/signals.hpp"

namespace topoeeg {

struct EmbeddingParams {
  std::size_t dim = 8;
  std::size_t lag = 10;
};

/// Number of delay vectors a series of `length` samples yields.
inline std::size_t embedded_count(std::size_t length, const EmbeddingParams& p) {
  if (p.dim == 0 || p.lag == 0) throw ParameterError("embedding: dim and lag must be >= 1");
  const std::size_t span = (p.dim - 1) * p.lag;
  if (span >= length) throw ParameterError("embedding: series too short for (dim - 1) * lag");
  return length - span;
}

/// Point k is (x[k], x[k + lag], ..., x[k + (dim - 1) * lag]).
inline PointCloud delay_embed(std::span<const double> x, const EmbeddingParams& p) {
  const std::size_t m = embedded_count(x.size(), p);
  std::vector<double> coords;
  coords.reserve(m * p.dim);
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t j = 0; j < p.dim; ++j) coords.push_back(x[k + j * p.lag]);
  return PointCloud(p.dim, std::move(coords));
}

inline PointCloud delay_embed(const Segment& seg, const EmbeddingParams& p) { return delay_embed(seg.samples, p); }

struct LagSelection {
  std::size_t lag = 1;
  std::vector<double> ami;  // ami[i] is the estimate at lag i + 1, in nats
};

inline constexpr std::size_t kDefaultAmiBins = 16;

/// Histogram estimate of I(x_t; x_{t+lag}) with equal-width bins over the
/// observed range of the whole series.
inline double average_mutual_information(std::span<const double> x, std::size_t lag, std::size_t bins) {
  if (bins < 2) throw ParameterError("ami: bins must be >= 2");
  if (lag >= x.size()) throw ParameterError("ami: lag must be shorter than the series");
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) throw DegenerateInputError("ami: constant series has a zero-entropy histogram");
  auto bin = [&](double v) {
    const auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * double(bins));
    return std::min(b, bins - 1);
  };
  const std::size_t n = x.size() - lag;
  std::vector<double> joint(bins * bins, 0.0), pa(bins, 0.0), pb(bins, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    const auto a = bin(x[t]), b = bin(x[t + lag]);
    joint[a * bins + b] += 1.0;
    pa[a] += 1.0;
    pb[b] += 1.0;
  }
  double mi = 0.0;
  const double total = double(n);
  for (std::size_t a = 0; a < bins; ++a)
    for (std::size_t b = 0; b < bins; ++b) {
      const double c = joint[a * bins + b];
      if (c > 0.0) mi += c / total * std::log(c * total / (pa[a] * pb[b]));
    }
  return mi;
}

/// AMI curve over lags 1..max_lag; picks the first local minimum, falling
/// back to the global minimum.
inline LagSelection ami_lag(std::span<const double> x, std::size_t max_lag, std::size_t bins = kDefaultAmiBins) {
  if (max_lag < 1 || max_lag >= x.size() / 2) throw ParameterError("ami_lag: max_lag must be in [1, length/2)");
  LagSelection out;
  for (std::size_t lag = 1; lag <= max_lag; ++lag) out.ami.push_back(average_mutual_information(x, lag, bins));
  const auto& a = out.ami;
  for (std::size_t i = 1; i + 1 < a.size(); ++i)
    if (a[i] < a[i - 1] && a[i] <= a[i + 1]) {
      out.lag = i + 1;
      return out;
    }
  out.lag = std::size_t(std::min_element(a.begin(), a.end()) - a.begin()) + 1;
  return out;
}

struct DimensionSelection {
  std::size_t dim = 1;
  std::vector<double> fnn;  // fnn[i] is the false-neighbour fraction at dimension i + 1
};

struct FnnOptions {
  double r_tol = 15.0;
  double a_tol = 2.0;
  double threshold = 0.05;
};

/// False-nearest-neighbour fraction at dimension `dim` using both Kennel
/// criteria. Exact duplicates (distance 0) are not eligible as neighbours.
inline double fnn_fraction(std::span<const double> x, std::size_t lag, std::size_t dim, const FnnOptions& opt = {}) {
  if (dim == 0 || lag == 0) throw ParameterError("fnn: dim and lag must be >= 1");
  if (dim * lag + 2 > x.size()) throw ParameterError("fnn: series too short for the requested dimension");
  const std::size_t m = x.size() - dim * lag;  // points that also exist at dim + 1

  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= double(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  const double ra = std::sqrt(var / double(x.size()));
  if (!(ra > 0.0)) throw DegenerateInputError("fnn: constant series");

  std::size_t false_count = 0, counted = 0;
  for (std::size_t i = 0; i < m; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t nn = m;
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      double d2 = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double diff = x[i + k * lag] - x[j + k * lag];
        d2 += diff * diff;
      }
      if (d2 > 0.0 && d2 < best) {
        best = d2;
        nn = j;
      }
    }
    if (nn == m) continue;
    ++counted;
    const double rd = std::sqrt(best);
    const double extra = std::abs(x[i + dim * lag] - x[nn + dim * lag]);
    const double rd1 = std::sqrt(best + extra * extra);
    if (extra / rd > opt.r_tol || rd1 / ra > opt.a_tol) ++false_count;
  }
  return counted == 0 ? 0.0 : double(false_count) / double(counted);
}

inline DimensionSelection fnn_dim(std::span<const double> x, std::size_t lag, std::size_t max_dim,
                                  const FnnOptions& opt = {}) {
  if (max_dim < 2) throw ParameterError("fnn_dim: max_dim must be >= 2");
  if (lag == 0 || max_dim * lag + 2 > x.size()) throw ParameterError("fnn_dim: series too short for max_dim");
  DimensionSelection out;
  out.dim = max_dim;
  bool chosen = false;
  for (std::size_t d = 1; d <= max_dim; ++d) {
    out.fnn.push_back(fnn_fraction(x, lag, d, opt));
    if (!chosen && out.fnn.back() < opt.threshold) {
      out.dim = d;
      chosen = true;
    }
  }
  return out;
}

}  // namespace topoeeg

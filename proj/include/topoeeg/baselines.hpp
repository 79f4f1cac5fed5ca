#pragma once

// Classical nonlinear descriptors used as comparison baselines: sample,
// approximate and fuzzy entropy, recurrence rate, Poincare SD1/SD2 and the
// largest Lyapunov exponent (Rosenstein).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "topoeeg/embedding.hpp"
#include "topoeeg/errors.hpp"

namespace topoeeg {

inline double population_sd(std::span<const double> x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= double(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  return std::sqrt(var / double(x.size()));
}

/// Similarity tolerance: either a multiple of the series' standard deviation
/// or an absolute value.
struct Tolerance {
  double value = 0.2;
  bool relative = true;

  static Tolerance sd_fraction(double f) { return {f, true}; }
  static Tolerance absolute(double r) { return {r, false}; }

  double resolve(std::span<const double> x, std::string_view who) const {
    if (!relative) {
      if (!(value >= 0.0)) throw ParameterError(std::string(who) + ": tolerance must be >= 0");
      return value;
    }
    const double sd = population_sd(x);
    if (!(sd > 0.0)) throw DegenerateInputError(std::string(who) + ": zero standard deviation");
    return value * sd;
  }
};

namespace detail {

inline bool chebyshev_within(std::span<const double> x, std::size_t i, std::size_t j, std::size_t len, double r) {
  for (std::size_t k = 0; k < len; ++k)
    if (std::abs(x[i + k] - x[j + k]) > r) return false;
  return true;
}

}  // namespace detail

/// -ln(A/B): B counts template pairs (i < j) of length m within r, A the
/// same pairs extended to m + 1. Returns +inf when A is zero.
inline double sample_entropy(std::span<const double> x, std::size_t m = 2, Tolerance tol = {}) {
  if (x.size() <= m + 1) throw ParameterError("sample_entropy: series must be longer than m + 1");
  const double r = tol.resolve(x, "sample_entropy");
  const std::size_t n = x.size() - m;
  std::size_t a = 0, b = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!detail::chebyshev_within(x, i, j, m, r)) continue;
      ++b;
      if (std::abs(x[i + m] - x[j + m]) <= r) ++a;
    }
  if (b == 0) throw DegenerateInputError("sample_entropy: no template matches of length m");
  if (a == 0) return std::numeric_limits<double>::infinity();
  return -std::log(double(a) / double(b));
}

/// phi_m - phi_{m+1} with self-matches included.
inline double approx_entropy(std::span<const double> x, std::size_t m = 2, Tolerance tol = {}) {
  if (x.size() <= m + 1) throw ParameterError("approx_entropy: series must be longer than m + 1");
  const double r = tol.resolve(x, "approx_entropy");
  auto phi = [&](std::size_t len) {
    const std::size_t n = x.size() - len + 1;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t c = 0;
      for (std::size_t j = 0; j < n; ++j)
        if (detail::chebyshev_within(x, i, j, len, r)) ++c;
      s += std::log(double(c) / double(n));
    }
    return s / double(n);
  };
  return phi(m) - phi(m + 1);
}

/// ln(phi_m) - ln(phi_{m+1}) with baseline-removed templates and membership
/// exp(-(d / r)^gradient).
inline double fuzzy_entropy(std::span<const double> x, std::size_t m = 2, Tolerance tol = {}, double gradient = 2.0) {
  if (x.size() <= m + 2) throw ParameterError("fuzzy_entropy: series must be longer than m + 2");
  const double r = tol.resolve(x, "fuzzy_entropy");
  if (!(r > 0.0)) throw ParameterError("fuzzy_entropy: tolerance must be positive");
  const std::size_t n = x.size() - m;
  auto phi = [&](std::size_t len) {
    std::vector<double> base(len * n);
    for (std::size_t i = 0; i < n; ++i) {
      double mean = 0.0;
      for (std::size_t k = 0; k < len; ++k) mean += x[i + k];
      mean /= double(len);
      for (std::size_t k = 0; k < len; ++k) base[i * len + k] = x[i + k] - mean;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        double d = 0.0;
        for (std::size_t k = 0; k < len; ++k) d = std::max(d, std::abs(base[i * len + k] - base[j * len + k]));
        row += std::exp(-std::pow(d / r, gradient));
      }
      total += row / double(n - 1);
    }
    return total / double(n);
  };
  return std::log(phi(m)) - std::log(phi(m + 1));
}

/// Fraction of embedded point pairs (i < j) within eps (Euclidean).
inline double recurrence_rate(std::span<const double> x, const EmbeddingParams& p, Tolerance eps = {}) {
  // A constant series has sd 0 and therefore eps 0: every pair recurs.
  const double r = eps.relative ? eps.value * population_sd(x) : eps.resolve(x, "recurrence_rate");
  const auto pc = delay_embed(x, p);
  const std::size_t m = pc.size();
  if (m < 2) throw ParameterError("recurrence_rate: need at least two embedded points");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      if (euclidean(pc.point(i), pc.point(j)) <= r) ++hits;
  return double(hits) / (double(m) * double(m - 1) / 2.0);
}

struct PoincareSd {
  double sd1 = 0.0;
  double sd2 = 0.0;
};

/// Spread of the (x_n, x_{n+1}) scatter across and along the identity line.
inline PoincareSd poincare_sd(std::span<const double> x) {
  if (x.size() < 3) throw ParameterError("poincare_sd: need at least 3 samples");
  std::vector<double> across, along;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    across.push_back((x[i + 1] - x[i]) / std::sqrt(2.0));
    along.push_back((x[i + 1] + x[i]) / std::sqrt(2.0));
  }
  return {population_sd(across), population_sd(along)};
}

struct LyapunovOptions {
  std::size_t theiler = 0;  // temporal exclusion window; 0 selects the embedding lag
  std::size_t horizon = 10;
};

/// Rosenstein estimate in nats per sample: slope of the mean log divergence
/// of initially nearest neighbours over `horizon` steps.
inline double lyapunov_largest(std::span<const double> x, const EmbeddingParams& p, LyapunovOptions opt = {}) {
  const auto pc = delay_embed(x, p);
  const std::size_t m = pc.size();
  const std::size_t w = opt.theiler ? opt.theiler : p.lag;
  if (opt.horizon < 2) throw ParameterError("lyapunov: horizon must be >= 2");
  if (m <= opt.horizon + w + 1) throw ParameterError("lyapunov: series too short for embedding and horizon");

  std::vector<double> sum(opt.horizon, 0.0);
  std::vector<std::size_t> count(opt.horizon, 0);
  bool any = false;
  for (std::size_t j = 0; j < m; ++j) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t nn = m;
    for (std::size_t k = 0; k < m; ++k) {
      if ((j > k ? j - k : k - j) <= w) continue;
      const double d = euclidean(pc.point(j), pc.point(k));
      if (d > 0.0 && d < best) {
        best = d;
        nn = k;
      }
    }
    if (nn == m) continue;
    any = true;
    for (std::size_t i = 0; i < opt.horizon && j + i < m && nn + i < m; ++i) {
      const double d = euclidean(pc.point(j + i), pc.point(nn + i));
      if (d > 0.0) {
        sum[i] += std::log(d);
        ++count[i];
      }
    }
  }
  if (!any) throw DegenerateInputError("lyapunov: no non-trivial nearest neighbours (constant series?)");

  double sx = 0, sy = 0, sxx = 0, sxy = 0, npts = 0;
  for (std::size_t i = 0; i < opt.horizon; ++i) {
    if (count[i] == 0) continue;
    const double y = sum[i] / double(count[i]);
    const double t = double(i);
    sx += t;
    sy += y;
    sxx += t * t;
    sxy += t * y;
    npts += 1;
  }
  const double denom = npts * sxx - sx * sx;
  if (npts < 2 || denom == 0.0) throw DegenerateInputError("lyapunov: divergence curve too short to fit");
  return (npts * sxy - sx * sy) / denom;
}

// ---------------------------------------------------------------------------
// Descriptor sets for the comparison harness

enum class Descriptor { fuzzy_entropy, approx_entropy, sample_entropy, recurrence, poincare, lyapunov };

inline constexpr Descriptor kAllDescriptors[] = {Descriptor::fuzzy_entropy, Descriptor::approx_entropy,
                                                 Descriptor::sample_entropy, Descriptor::recurrence,
                                                 Descriptor::poincare,       Descriptor::lyapunov};

inline std::string_view descriptor_name(Descriptor d) noexcept {
  switch (d) {
    case Descriptor::fuzzy_entropy: return "fuzzy_entropy";
    case Descriptor::approx_entropy: return "approx_entropy";
    case Descriptor::sample_entropy: return "sample_entropy";
    case Descriptor::recurrence: return "recurrence_rate";
    case Descriptor::poincare: return "poincare";
    case Descriptor::lyapunov: return "lyapunov";
  }
  return "?";
}

inline Descriptor parse_descriptor(std::string_view s) {
  for (Descriptor d : kAllDescriptors)
    if (descriptor_name(d) == s) return d;
  throw ParameterError("unknown descriptor '" + std::string(s) + "'");
}

inline std::size_t descriptor_arity(Descriptor d) noexcept { return d == Descriptor::poincare ? 2 : 1; }

struct BaselineParams {
  std::size_t m = 2;
  double r_fraction = 0.2;
  double fuzzy_gradient = 2.0;
  EmbeddingParams embedding{};
  LyapunovOptions lyapunov{};
};

/// Finite descriptor values for one segment. Degenerate cases (constant
/// input, no matches) map to 0; an undefined sample entropy (no m+1
/// matches) maps to ln of the number of template pairs, its upper bound.
inline std::vector<double> describe(Descriptor d, std::span<const double> x, const BaselineParams& bp) {
  const auto tol = Tolerance::sd_fraction(bp.r_fraction);
  try {
    switch (d) {
      case Descriptor::fuzzy_entropy: return {fuzzy_entropy(x, bp.m, tol, bp.fuzzy_gradient)};
      case Descriptor::approx_entropy: return {approx_entropy(x, bp.m, tol)};
      case Descriptor::sample_entropy: {
        const double v = sample_entropy(x, bp.m, tol);
        if (std::isfinite(v)) return {v};
        const double n = double(x.size() - bp.m);
        return {std::log(n * (n - 1) / 2.0)};
      }
      case Descriptor::recurrence: return {recurrence_rate(x, bp.embedding, tol)};
      case Descriptor::poincare: {
        const auto p = poincare_sd(x);
        return {p.sd1, p.sd2};
      }
      case Descriptor::lyapunov: return {lyapunov_largest(x, bp.embedding, bp.lyapunov)};
    }
  } catch (const DegenerateInputError&) {
    return std::vector<double>(descriptor_arity(d), 0.0);
  }
  return {};
}

}  // namespace topoeeg

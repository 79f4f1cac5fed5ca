#pragma once

// Vietoris-Rips persistent homology in dimensions 0-2 over Z/2.
//
// The filtration is materialized explicitly (simplices up to dimension 3)
// and sorted by (diameter, dimension, lexicographic vertices). H0 is read off
// a union-find sweep over the edges; H1 and H2 come from column reduction of
// the boundary matrix, processed from high to low dimension so that every
// pivot found in dimension k+1 clears the corresponding column in
// dimension k.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "topoeeg/errors.hpp"
#include "topoeeg/point_cloud.hpp"
#include "topoeeg/union_find.hpp"

namespace topoeeg {

inline constexpr int kMaxHomologyDim = 2;
inline constexpr int kMaxSimplexDim = 3;
inline constexpr std::size_t kDefaultSimplexCap = 5'000'000;

/// Symmetric, zero-diagonal matrix of pairwise distances.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;

  DistanceMatrix(std::size_t n, std::vector<double> entries) : n_(n), d_(std::move(entries)) {
    if (d_.size() != n_ * n_) throw ParameterError("distance matrix must have n*n entries");
    for (std::size_t i = 0; i < n_; ++i) {
      if (d_[i * n_ + i] != 0.0) throw ParameterError("distance matrix diagonal must be zero");
      for (std::size_t j = 0; j < n_; ++j) {
        const double v = d_[i * n_ + j];
        if (!std::isfinite(v) || v < 0.0)
          throw ParameterError("distance matrix entries must be finite and nonnegative");
        if (v != d_[j * n_ + i]) throw ParameterError("distance matrix must be symmetric");
      }
    }
  }

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return d_[i * n_ + j]; }
  const std::vector<double>& entries() const noexcept { return d_; }

 private:
  std::size_t n_ = 0;
  std::vector<double> d_;
};

inline DistanceMatrix distance_matrix(const PointCloud& pc) {
  if (pc.empty()) throw ParameterError("distance_matrix: point cloud is empty");
  const std::size_t n = pc.size();
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d[i * n + j] = d[j * n + i] = euclidean(pc.point(i), pc.point(j));
  return DistanceMatrix(n, std::move(d));
}

/// min_i max_j d(i, j). Above this scale the Rips complex is a cone.
inline double enclosing_radius(const DistanceMatrix& dm) {
  if (dm.size() == 0) throw ParameterError("enclosing_radius: empty distance matrix");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < dm.size(); ++i) {
    double row_max = 0.0;
    for (std::size_t j = 0; j < dm.size(); ++j) row_max = std::max(row_max, dm(i, j));
    best = std::min(best, row_max);
  }
  return best;
}

struct FiltrationSimplex {
  std::array<std::uint32_t, 4> vertices{};
  std::uint8_t count = 0;  // number of vertices, 1..4
  double value = 0.0;

  int dim() const noexcept { return int(count) - 1; }
  std::span<const std::uint32_t> verts() const noexcept { return {vertices.data(), count}; }
};

/// Strict filtration order: (value, dimension, lexicographic vertices).
inline bool filtration_less(const FiltrationSimplex& a, const FiltrationSimplex& b) noexcept {
  if (a.value != b.value) return a.value < b.value;
  if (a.count != b.count) return a.count < b.count;
  return std::lexicographical_compare(a.vertices.begin(), a.vertices.begin() + a.count, b.vertices.begin(),
                                      b.vertices.begin() + b.count);
}

struct Filtration {
  std::vector<FiltrationSimplex> simplices;
  double threshold = 0.0;
  int max_dim = 0;
  std::size_t point_count = 0;
};

/// Enumerates every simplex of dimension <= max_dim whose diameter is at most
/// `threshold` and sorts them into filtration order.
inline Filtration build_rips(const DistanceMatrix& dm, int max_dim, double threshold,
                             std::size_t simplex_cap = kDefaultSimplexCap) {
  if (max_dim < 0 || max_dim > kMaxSimplexDim) throw ParameterError("build_rips: max_dim must be in [0, 3]");
  if (!(threshold >= 0.0) || !std::isfinite(threshold))
    throw ParameterError("build_rips: threshold must be finite and nonnegative");
  const std::size_t n = dm.size();
  if (n == 0) throw ParameterError("build_rips: empty distance matrix");

  Filtration f;
  f.threshold = threshold;
  f.max_dim = max_dim;
  f.point_count = n;

  auto push = [&](FiltrationSimplex s) {
    if (f.simplices.size() >= simplex_cap)
      throw ResourceError("build_rips: simplex count exceeds cap of " + std::to_string(simplex_cap));
    f.simplices.push_back(s);
  };

  for (std::uint32_t i = 0; i < n; ++i) push({{i, 0, 0, 0}, 1, 0.0});

  // Higher neighbours only: adjacency[i] lists j > i with d(i, j) <= threshold.
  const std::size_t words = (n + 63) / 64;
  std::vector<std::uint64_t> adj(n * words, 0);
  auto adjacent = [&](std::size_t i, std::size_t j) { return (adj[i * words + j / 64] >> (j % 64)) & 1u; };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (dm(i, j) <= threshold) adj[i * words + j / 64] |= std::uint64_t{1} << (j % 64);

  if (max_dim >= 1) {
    for (std::uint32_t i = 0; i < n; ++i)
      for (std::uint32_t j = i + 1; j < n; ++j) {
        if (!adjacent(i, j)) continue;
        const double dij = dm(i, j);
        push({{i, j, 0, 0}, 2, dij});
        if (max_dim < 2) continue;
        for (std::uint32_t k = j + 1; k < n; ++k) {
          if (!adjacent(i, k) || !adjacent(j, k)) continue;
          const double dijk = std::max({dij, dm(i, k), dm(j, k)});
          push({{i, j, k, 0}, 3, dijk});
          if (max_dim < 3) continue;
          for (std::uint32_t l = k + 1; l < n; ++l) {
            if (!adjacent(i, l) || !adjacent(j, l) || !adjacent(k, l)) continue;
            push({{i, j, k, l}, 4, std::max({dijk, dm(i, l), dm(j, l), dm(k, l)})});
          }
        }
      }
  }

  std::sort(f.simplices.begin(), f.simplices.end(), filtration_less);
  return f;
}

/// Selects which homology dimensions a persistence computation reports.
struct HomologyDims {
  std::array<bool, 3> enabled{false, false, false};

  HomologyDims() = default;
  HomologyDims(std::initializer_list<int> dims) {
    for (int d : dims) {
      if (d < 0 || d > kMaxHomologyDim) throw ParameterError("homology dimension must be 0, 1 or 2");
      enabled[std::size_t(d)] = true;
    }
  }

  bool contains(int d) const noexcept { return d >= 0 && d <= kMaxHomologyDim && enabled[std::size_t(d)]; }
  bool empty() const noexcept { return !enabled[0] && !enabled[1] && !enabled[2]; }
  int max() const noexcept {
    for (int d = kMaxHomologyDim; d >= 0; --d)
      if (enabled[std::size_t(d)]) return d;
    return -1;
  }
};

struct PersistencePair {
  int dim = 0;
  double birth = 0.0;
  double death = 0.0;
  bool essential = false;

  double persistence() const noexcept { return death - birth; }
  friend bool operator==(const PersistencePair&, const PersistencePair&) = default;
};

inline bool pair_less(const PersistencePair& a, const PersistencePair& b) noexcept {
  if (a.birth != b.birth) return a.birth < b.birth;
  if (a.death != b.death) return a.death < b.death;
  return a.essential < b.essential;
}

/// Pairs grouped by homology dimension. Essential classes are capped at the
/// filtration threshold and keep their `essential` flag.
struct PersistenceDiagram {
  std::array<std::vector<PersistencePair>, 3> by_dim;
  double threshold = 0.0;
  std::size_t point_count = 0;

  const std::vector<PersistencePair>& pairs(int dim) const { return by_dim.at(std::size_t(dim)); }
  std::vector<PersistencePair>& pairs(int dim) { return by_dim.at(std::size_t(dim)); }

  void normalize() {
    for (auto& v : by_dim) std::sort(v.begin(), v.end(), pair_less);
  }

  friend bool operator==(const PersistenceDiagram&, const PersistenceDiagram&) = default;
};

namespace detail {

inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) noexcept {
  if (k > n) return 0;
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Maps a simplex (by combinatorial number) to its filtration position.
class SimplexLocator {
 public:
  SimplexLocator(const Filtration& f) : n_(f.point_count) {
    binom_.assign((n_ + 1) * 5, 0);
    for (std::size_t v = 0; v <= n_; ++v)
      for (std::size_t k = 0; k <= 4; ++k) binom_[v * 5 + k] = binomial(v, k);
    for (int d = 0; d <= f.max_dim; ++d) {
      const std::uint64_t total = binomial(n_, std::uint64_t(d) + 1);
      dense_[std::size_t(d)] = total <= kDenseLimit;
      if (dense_[std::size_t(d)]) table_[std::size_t(d)].assign(total, kAbsent);
    }
    for (std::size_t pos = 0; pos < f.simplices.size(); ++pos) {
      const auto& s = f.simplices[pos];
      insert(s.dim(), index_of(s.verts()), std::uint32_t(pos));
    }
  }

  std::uint64_t index_of(std::span<const std::uint32_t> verts) const noexcept {
    std::uint64_t idx = 0;
    for (std::size_t i = 0; i < verts.size(); ++i) idx += binom_[verts[i] * 5 + i + 1];
    return idx;
  }

  // Position of the simplex with the given sorted vertices, or kAbsent.
  std::uint32_t find(std::span<const std::uint32_t> verts) const {
    const auto d = verts.size() - 1;
    const auto idx = index_of(verts);
    if (dense_[d]) return table_[d][idx];
    const auto it = sparse_[d].find(idx);
    return it == sparse_[d].end() ? kAbsent : it->second;
  }

  static constexpr std::uint32_t kAbsent = std::numeric_limits<std::uint32_t>::max();

 private:
  static constexpr std::uint64_t kDenseLimit = 1u << 24;

  void insert(int d, std::uint64_t idx, std::uint32_t pos) {
    if (dense_[std::size_t(d)])
      table_[std::size_t(d)][idx] = pos;
    else
      sparse_[std::size_t(d)].emplace(idx, pos);
  }

  std::size_t n_;
  std::vector<std::uint64_t> binom_;
  std::array<bool, 4> dense_{};
  std::array<std::vector<std::uint32_t>, 4> table_;
  std::array<std::unordered_map<std::uint64_t, std::uint32_t>, 4> sparse_;
};

// Facet positions of simplex `s`, ascending. Throws if a facet is missing or
// does not precede the simplex.
inline void boundary_of(const SimplexLocator& loc, const FiltrationSimplex& s, std::uint32_t self,
                        std::vector<std::uint32_t>& out) {
  out.clear();
  std::array<std::uint32_t, 3> face{};
  for (std::size_t skip = 0; skip < s.count; ++skip) {
    std::size_t w = 0;
    for (std::size_t i = 0; i < s.count; ++i)
      if (i != skip) face[w++] = s.vertices[i];
    const auto pos = loc.find({face.data(), w});
    if (pos == SimplexLocator::kAbsent || pos >= self)
      throw InvariantError("persistence: filtration is not closed under faces or faces do not precede cofaces");
    out.push_back(pos);
  }
  std::sort(out.begin(), out.end());
}

// out := a xor b for ascending index lists.
inline void symmetric_difference(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b,
                                 std::vector<std::uint32_t>& out) {
  out.clear();
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j])
      out.push_back(a[i++]);
    else if (b[j] < a[i])
      out.push_back(b[j++]);
    else {
      ++i;
      ++j;
    }
  }
  out.insert(out.end(), a.begin() + std::ptrdiff_t(i), a.end());
  out.insert(out.end(), b.begin() + std::ptrdiff_t(j), b.end());
}

inline void check_filtration_order(const Filtration& f) {
  for (std::size_t i = 1; i < f.simplices.size(); ++i)
    if (!filtration_less(f.simplices[i - 1], f.simplices[i]))
      throw InvariantError("persistence: simplices are not in strict filtration order");
  for (const auto& s : f.simplices) {
    if (s.count == 0 || s.dim() > f.max_dim) throw InvariantError("persistence: simplex dimension out of range");
    if (s.value > f.threshold) throw InvariantError("persistence: simplex value exceeds threshold");
  }
}

inline void require_valid_request(const Filtration& f, const HomologyDims& dims) {
  if (dims.empty()) throw ParameterError("persistence: no homology dimensions requested");
  if (f.max_dim < dims.max() + 1 && dims.max() > 0)
    throw ParameterError("persistence: filtration max_dim must be at least max homology dim + 1");
  if (f.point_count == 0) throw ParameterError("persistence: empty filtration");
}

inline void push_pair(PersistenceDiagram& dg, int dim, double birth, double death, bool essential) {
  if (!essential && birth == death) return;
  dg.pairs(dim).push_back({dim, birth, death, essential});
}

// Edge values of the 1-skeleton, +inf where no edge exists.
inline std::vector<double> edge_table(const Filtration& f) {
  const std::size_t n = f.point_count;
  std::vector<double> e(n * n, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) e[i * n + i] = 0.0;
  for (const auto& s : f.simplices)
    if (s.count == 2) e[s.vertices[0] * n + s.vertices[1]] = e[s.vertices[1] * n + s.vertices[0]] = s.value;
  return e;
}

// True when `t` forms an apparent pair with one of its cofacets in the Rips
// complex at the filtration threshold: its minimal cofacet c has t as maximal
// facet. Such a t is a pivot row one dimension up, so its own column reduces
// to zero and can be cleared without materializing the cofacets.
//
// Among cofacets t+{x} of equal value the lexicographically smallest is the
// one with the smallest x; among facets c-{u} of equal value the
// lexicographically largest is the one dropping the smallest u.
inline bool has_apparent_cofacet(const FiltrationSimplex& t, const std::vector<double>& edges, std::size_t n,
                                 double threshold) {
  const std::size_t k = t.count;
  const auto* tv = t.vertices.data();
  double best_value = std::numeric_limits<double>::infinity();
  std::size_t best_x = n;
  for (std::uint32_t x = 0; x < n; ++x) {
    const double* row = edges.data() + std::size_t(x) * n;
    double v = t.value;
    bool skip = false;
    for (std::size_t i = 0; i < k; ++i) {
      if (tv[i] == x) {
        skip = true;
        break;
      }
      v = std::max(v, row[tv[i]]);
      if (v >= best_value) {
        skip = true;
        break;
      }
    }
    if (skip || v > threshold) continue;
    best_value = v;
    best_x = x;
  }
  if (best_x == n) return false;

  std::array<std::uint32_t, 5> c{};
  std::size_t w = 0, i = 0, x_pos = 0;
  for (; i < k && tv[i] < best_x; ++i) c[w++] = tv[i];
  x_pos = w;
  c[w++] = std::uint32_t(best_x);
  for (; i < k; ++i) c[w++] = tv[i];

  for (std::size_t drop = 0; drop <= k; ++drop) {
    if (drop == x_pos) continue;
    double v = 0.0;
    for (std::size_t a = 0; a <= k; ++a) {
      if (a == drop) continue;
      for (std::size_t b = a + 1; b <= k; ++b)
        if (b != drop) v = std::max(v, edges[c[a] * n + c[b]]);
    }
    if (v > t.value || (v == t.value && drop < x_pos)) return false;
  }
  return true;
}

}  // namespace detail

/// Persistence pairs of a Rips filtration.
inline PersistenceDiagram persistence(const Filtration& filt, const HomologyDims& dims) {
  using detail::SimplexLocator;
  detail::require_valid_request(filt, dims);
  detail::check_filtration_order(filt);

  const auto& S = filt.simplices;
  PersistenceDiagram dg;
  dg.threshold = filt.threshold;
  dg.point_count = filt.point_count;

  // H0 and edge positivity from a union-find sweep.
  std::vector<bool> positive_edge(S.size(), false);
  {
    UnionFind uf(filt.point_count);
    std::size_t components = filt.point_count;
    for (std::size_t pos = 0; pos < S.size(); ++pos) {
      const auto& s = S[pos];
      if (s.count != 2) continue;
      if (uf.unite(s.vertices[0], s.vertices[1])) {
        --components;
        if (dims.contains(0)) detail::push_pair(dg, 0, 0.0, s.value, false);
      } else {
        positive_edge[pos] = true;
      }
    }
    if (dims.contains(0))
      for (std::size_t c = 0; c < components; ++c) detail::push_pair(dg, 0, 0.0, filt.threshold, true);
  }

  const int top = dims.contains(2) ? 3 : (dims.contains(1) ? 2 : 0);
  if (top >= 2) {
    const SimplexLocator loc(filt);
    // pivot_owner[row] = slot in `reduced` of the column whose pivot is row.
    std::vector<std::uint32_t> pivot_owner(S.size(), SimplexLocator::kAbsent);
    std::vector<bool> cleared(S.size(), false);
    std::vector<bool> zero_column(S.size(), false);
    std::vector<std::vector<std::uint32_t>> reduced;
    std::vector<std::uint32_t> column, scratch;
    const auto edges = detail::edge_table(filt);

    for (int k = top; k >= 2; --k) {
      for (std::uint32_t pos = 0; pos < S.size(); ++pos) {
        if (S[pos].count != k + 1 || cleared[pos]) continue;
        if (k == top && detail::has_apparent_cofacet(S[pos], edges, filt.point_count, filt.threshold)) {
          zero_column[pos] = true;
          continue;
        }
        detail::boundary_of(loc, S[pos], pos, column);
        while (!column.empty()) {
          const auto owner = pivot_owner[column.back()];
          if (owner == SimplexLocator::kAbsent) break;
          detail::symmetric_difference(column, reduced[owner], scratch);
          column.swap(scratch);
        }
        if (column.empty()) {
          zero_column[pos] = true;
          continue;
        }
        const auto pivot = column.back();
        pivot_owner[pivot] = std::uint32_t(reduced.size());
        cleared[pivot] = true;
        if (dims.contains(k - 1)) detail::push_pair(dg, k - 1, S[pivot].value, S[pos].value, false);
        reduced.push_back(column);
      }
    }

    // Essential classes: positive simplices never hit by a pivot.
    for (std::uint32_t pos = 0; pos < S.size(); ++pos) {
      if (pivot_owner[pos] != SimplexLocator::kAbsent) continue;
      if (S[pos].count == 2 && dims.contains(1) && positive_edge[pos])
        detail::push_pair(dg, 1, S[pos].value, filt.threshold, true);
      if (S[pos].count == 3 && dims.contains(2) && zero_column[pos])
        detail::push_pair(dg, 2, S[pos].value, filt.threshold, true);
    }
  }

  dg.normalize();
  return dg;
}

/// Convenience: distance matrix, enclosing-radius threshold (unless given),
/// Rips filtration and persistence in one call.
inline PersistenceDiagram rips_persistence(const PointCloud& pc, const HomologyDims& dims,
                                           std::optional<double> threshold = std::nullopt,
                                           std::size_t simplex_cap = kDefaultSimplexCap) {
  const auto dm = distance_matrix(pc);
  const double thr = threshold ? *threshold : enclosing_radius(dm);
  const int max_dim = std::min(dims.max() + 1, kMaxSimplexDim);
  return persistence(build_rips(dm, std::max(max_dim, 1), thr, simplex_cap), dims);
}

}  // namespace topoeeg

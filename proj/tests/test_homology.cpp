#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "topoeeg/homology.hpp"
#include "topoeeg/homology_naive.hpp"
#include "topoeeg/random.hpp"

using namespace topoeeg;

namespace {

PointCloud cloud(std::size_t dim, std::vector<double> c) { return PointCloud(dim, std::move(c)); }

PointCloud unit_square() { return cloud(2, {0, 0, 1, 0, 1, 1, 0, 1}); }

PointCloud random_cloud(Rng& rng, std::size_t n, std::size_t dim) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> c(n * dim);
  for (auto& v : c) v = u(rng);
  return cloud(dim, std::move(c));
}

HomologyDims all_dims() { return HomologyDims{0, 1, 2}; }

// All vertex subsets of size <= max_dim + 1 with diameter <= threshold.
std::set<std::pair<std::vector<std::uint32_t>, double>> rips_by_subsets(const DistanceMatrix& dm, int max_dim,
                                                                        double thr) {
  std::set<std::pair<std::vector<std::uint32_t>, double>> out;
  const std::size_t n = dm.size();
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    std::vector<std::uint32_t> v;
    for (std::uint32_t i = 0; i < n; ++i)
      if (mask >> i & 1u) v.push_back(i);
    if (int(v.size()) > max_dim + 1) continue;
    double diam = 0;
    for (auto a : v)
      for (auto b : v) diam = std::max(diam, dm(a, b));
    if (diam <= thr) out.insert({v, diam});
  }
  return out;
}

// H0 deaths from Prim's minimum spanning forest restricted to edges <= thr.
std::multiset<double> mst_deaths(const DistanceMatrix& dm, double thr, std::size_t& components) {
  const std::size_t n = dm.size();
  std::vector<bool> in(n, false);
  std::multiset<double> deaths;
  components = 0;
  for (std::size_t root = 0; root < n; ++root) {
    if (in[root]) continue;
    ++components;
    std::vector<double> key(n, INFINITY);
    key[root] = 0;
    while (true) {
      std::size_t u = n;
      for (std::size_t i = 0; i < n; ++i)
        if (!in[i] && key[i] <= thr && (u == n || key[i] < key[u])) u = i;
      if (u == n) break;
      in[u] = true;
      if (u != root && key[u] > 0) deaths.insert(key[u]);
      for (std::size_t v = 0; v < n; ++v)
        if (!in[v]) key[v] = std::min(key[v], dm(u, v));
    }
  }
  return deaths;
}

std::vector<PersistencePair> sorted_pairs(const PersistenceDiagram& dg, int d) {
  auto v = dg.pairs(d);
  std::sort(v.begin(), v.end(), pair_less);
  return v;
}

}  // namespace

TEST(DistanceMatrixOp, Examples) {
  const auto d = distance_matrix(cloud(2, {0, 0, 3, 4}));
  EXPECT_EQ(d(0, 1), 5.0);
  EXPECT_EQ(d(1, 0), 5.0);
  const auto one = distance_matrix(cloud(3, {1, 2, 3}));
  EXPECT_EQ(one.size(), 1u);
  EXPECT_EQ(one(0, 0), 0.0);
  const auto sq = distance_matrix(unit_square());
  std::multiset<double> off;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j) off.insert(sq(i, j));
  EXPECT_EQ(off, (std::multiset<double>{1, 1, 1, 1, std::sqrt(2.0), std::sqrt(2.0)}));
  EXPECT_THROW(distance_matrix(PointCloud{}), ParameterError);
}

TEST(DistanceMatrixOp, ValidatesExplicitMatrices) {
  EXPECT_THROW(DistanceMatrix(2, {0, 1, 2, 0}), ParameterError);
  EXPECT_THROW(DistanceMatrix(2, {1, 1, 1, 0}), ParameterError);
  EXPECT_THROW(DistanceMatrix(2, {0, -1, -1, 0}), ParameterError);
  EXPECT_THROW(DistanceMatrix(2, {0, 1, 1}), ParameterError);
}

TEST(EnclosingRadius, Examples) {
  EXPECT_EQ(enclosing_radius(distance_matrix(cloud(1, {0, 1}))), 1.0);
  // min over rows of the row maximum, computed directly from the six distances
  const auto sq = distance_matrix(unit_square());
  double best = INFINITY;
  for (std::size_t i = 0; i < 4; ++i) {
    double mx = 0;
    for (std::size_t j = 0; j < 4; ++j) mx = std::max(mx, sq(i, j));
    best = std::min(best, mx);
  }
  EXPECT_EQ(enclosing_radius(sq), best);
  EXPECT_EQ(enclosing_radius(sq), std::sqrt(2.0));
  EXPECT_EQ(enclosing_radius(distance_matrix(cloud(2, {5, 5}))), 0.0);
}

TEST(BuildRips, EquilateralTriangle) {
  const DistanceMatrix dm(3, {0, 1, 1, 1, 0, 1, 1, 1, 0});
  const auto f = build_rips(dm, 2, 2.0);
  ASSERT_EQ(f.simplices.size(), 7u);
  std::map<int, int> by_dim;
  for (const auto& s : f.simplices) {
    ++by_dim[s.dim()];
    if (s.dim() > 0) {
      EXPECT_EQ(s.value, 1.0);
    }
  }
  EXPECT_EQ(by_dim[0], 3);
  EXPECT_EQ(by_dim[1], 3);
  EXPECT_EQ(by_dim[2], 1);
}

TEST(BuildRips, UnitSquareAtOneExcludesDiagonals) {
  const auto f = build_rips(distance_matrix(unit_square()), 1, 1.0);
  EXPECT_EQ(f.simplices.size(), 8u);
  const auto oracle = rips_by_subsets(distance_matrix(unit_square()), 1, 1.0);
  EXPECT_EQ(oracle.size(), 8u);
}

TEST(BuildRips, ZeroThresholdGivesVertices) {
  const auto f = build_rips(distance_matrix(unit_square()), 3, 0.0);
  ASSERT_EQ(f.simplices.size(), 4u);
  for (const auto& s : f.simplices) EXPECT_EQ(s.dim(), 0);
}

TEST(BuildRips, MatchesSubsetEnumeration) {
  Rng rng(derive_seed(11u, 1u));
  for (int trial = 0; trial < 40; ++trial) {
    const auto pc = random_cloud(rng, 3 + std::size_t(trial % 8), 2 + std::size_t(trial % 3));
    const auto dm = distance_matrix(pc);
    const double thr = enclosing_radius(dm) * (0.5 + 0.1 * (trial % 6));
    for (int md : {1, 2, 3}) {
      const auto f = build_rips(dm, md, thr);
      std::set<std::pair<std::vector<std::uint32_t>, double>> got;
      for (const auto& s : f.simplices) got.insert({{s.verts().begin(), s.verts().end()}, s.value});
      EXPECT_EQ(got.size(), f.simplices.size());
      EXPECT_EQ(got, rips_by_subsets(dm, md, thr));
      for (std::size_t i = 1; i < f.simplices.size(); ++i)
        EXPECT_TRUE(filtration_less(f.simplices[i - 1], f.simplices[i]));
    }
  }
}

TEST(BuildRips, CapAndArgumentErrors) {
  Rng rng(3);
  const auto dm = distance_matrix(random_cloud(rng, 12, 2));
  EXPECT_THROW(build_rips(dm, 3, 10.0, 100), ResourceError);
  EXPECT_THROW(build_rips(dm, 4, 1.0), ParameterError);
  EXPECT_THROW(build_rips(dm, 1, -1.0), ParameterError);
  EXPECT_THROW(build_rips(dm, 1, INFINITY), ParameterError);
}

TEST(Persistence, TwoPoints) {
  const auto dg = rips_persistence(cloud(1, {0, 1}), HomologyDims{0});
  const auto h0 = sorted_pairs(dg, 0);
  ASSERT_EQ(h0.size(), 2u);
  EXPECT_EQ(h0[0], (PersistencePair{0, 0.0, 1.0, false}));
  EXPECT_EQ(h0[1], (PersistencePair{0, 0.0, 1.0, true}));
}

TEST(Persistence, FourPointsOnALine) {
  const auto pc = cloud(1, {0, 0.1, 1, 1.1});
  const auto dm = distance_matrix(pc);
  const double thr = enclosing_radius(dm);
  const auto dg = persistence(build_rips(dm, 1, thr), HomologyDims{0});
  std::multiset<double> finite;
  std::size_t essential = 0;
  for (const auto& p : dg.pairs(0)) p.essential ? ++essential : (finite.insert(p.death), 0u);
  std::size_t comps = 0;
  EXPECT_EQ(finite, mst_deaths(dm, thr, comps));
  EXPECT_EQ(essential, comps);
  ASSERT_EQ(finite.size(), 3u);
  EXPECT_NEAR(*finite.begin(), 0.1, 1e-12);
  EXPECT_NEAR(*finite.rbegin(), 0.9, 1e-12);
}

TEST(Persistence, UnitSquareLoop) {
  const auto pc = unit_square();
  const auto f = build_rips(distance_matrix(pc), 2, std::sqrt(2.0) + 1e-9);
  const auto naive = persistence_naive(f, HomologyDims{0, 1});
  const auto fast = persistence(f, HomologyDims{0, 1});
  ASSERT_EQ(naive.pairs(1).size(), 1u);
  EXPECT_NEAR(naive.pairs(1)[0].birth, 1.0, 1e-9);
  EXPECT_NEAR(naive.pairs(1)[0].death, std::sqrt(2.0), 1e-9);
  ASSERT_EQ(fast.pairs(1).size(), 1u);
  EXPECT_EQ(fast.pairs(1)[0], naive.pairs(1)[0]);
  EXPECT_FALSE(fast.pairs(1)[0].essential);
}

TEST(Persistence, EquilateralTriangleHasNoLoop) {
  const DistanceMatrix dm(3, {0, 1, 1, 1, 0, 1, 1, 1, 0});
  const auto f = build_rips(dm, 2, 2.0);
  EXPECT_TRUE(persistence(f, HomologyDims{0, 1}).pairs(1).empty());
  EXPECT_TRUE(persistence_naive(f, HomologyDims{0, 1}).pairs(1).empty());
}

TEST(Persistence, OctahedronHasAVoid) {
  const auto pc = cloud(3, {1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1});
  const auto dg = rips_persistence(pc, all_dims(), 1.5);
  ASSERT_EQ(dg.pairs(2).size(), 1u);
  EXPECT_NEAR(dg.pairs(2)[0].birth, std::sqrt(2.0), 1e-12);
  EXPECT_TRUE(dg.pairs(2)[0].essential);
  EXPECT_EQ(dg.pairs(2)[0].death, 1.5);
}

TEST(Persistence, MatchesNaiveReductionOnRandomClouds) {
  Rng rng(derive_seed(99u, 7u));
  std::uniform_int_distribution<std::size_t> npts(3, 10), dim(2, 4);
  for (int trial = 0; trial < 300; ++trial) {
    const auto pc = random_cloud(rng, npts(rng), dim(rng));
    const auto dm = distance_matrix(pc);
    const auto f = build_rips(dm, 3, enclosing_radius(dm));
    auto a = persistence(f, all_dims());
    auto b = persistence_naive(f, all_dims());
    a.normalize();
    b.normalize();
    ASSERT_EQ(a, b) << "trial " << trial;
  }
}

TEST(Persistence, H0MatchesMinimumSpanningForest) {
  Rng rng(derive_seed(4u, 4u));
  for (int trial = 0; trial < 100; ++trial) {
    const auto pc = random_cloud(rng, 5 + std::size_t(trial % 30), 3);
    const auto dm = distance_matrix(pc);
    const double thr = enclosing_radius(dm) * 0.6;
    const auto dg = persistence(build_rips(dm, 1, thr), HomologyDims{0});
    std::multiset<double> finite;
    std::size_t essential = 0;
    for (const auto& p : dg.pairs(0)) {
      if (p.essential) ++essential;
      else finite.insert(p.death);
      EXPECT_EQ(p.birth, 0.0);
    }
    std::size_t comps = 0;
    EXPECT_EQ(finite, mst_deaths(dm, thr, comps));
    EXPECT_EQ(essential, comps);
  }
}

TEST(Persistence, InvariantUnderPointRelabelling) {
  Rng rng(derive_seed(8u, 2u));
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 8, d = 3;
    const auto pc = random_cloud(rng, n, d);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> c;
    for (auto i : perm) c.insert(c.end(), pc.point(i).begin(), pc.point(i).end());
    auto a = rips_persistence(pc, all_dims());
    auto b = rips_persistence(cloud(d, c), all_dims());
    a.normalize();
    b.normalize();
    for (int k = 0; k <= 2; ++k) {
      ASSERT_EQ(a.pairs(k).size(), b.pairs(k).size());
      for (std::size_t i = 0; i < a.pairs(k).size(); ++i) {
        EXPECT_NEAR(a.pairs(k)[i].birth, b.pairs(k)[i].birth, 1e-12);
        EXPECT_NEAR(a.pairs(k)[i].death, b.pairs(k)[i].death, 1e-12);
      }
    }
  }
}

TEST(Persistence, ZeroPersistencePairsAreDropped) {
  const auto dg = rips_persistence(cloud(2, {0, 0, 0, 0, 1, 0}), HomologyDims{0});
  for (const auto& p : dg.pairs(0)) EXPECT_GT(p.death - p.birth, 0.0);
  EXPECT_EQ(dg.pairs(0).size(), 2u);
}

TEST(Persistence, RequestValidation) {
  const auto f = build_rips(distance_matrix(unit_square()), 1, 1.5);
  EXPECT_THROW(persistence(f, HomologyDims{1}), ParameterError);
  EXPECT_THROW(persistence(f, HomologyDims{}), ParameterError);
  EXPECT_THROW(HomologyDims({3}), ParameterError);
}

TEST(Persistence, LargerCloudSelfConsistency) {
  Rng rng(derive_seed(21u));
  const auto pc = random_cloud(rng, 58, 8);
  const auto dg = rips_persistence(pc, all_dims());
  std::size_t essential0 = 0;
  for (const auto& p : dg.pairs(0)) essential0 += p.essential;
  EXPECT_EQ(essential0, 1u);
  EXPECT_EQ(dg.pairs(0).size(), 58u);
  for (int d = 0; d <= 2; ++d)
    for (const auto& p : dg.pairs(d)) {
      EXPECT_LE(p.birth, p.death);
      EXPECT_LE(p.death, dg.threshold);
    }
}

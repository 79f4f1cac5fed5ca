#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "topoeeg/embedding.hpp"
#include "topoeeg/random.hpp"
#include "topoeeg/signals.hpp"

using namespace topoeeg;

namespace {

std::vector<double> exact_sine(std::size_t period, std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t k = 0; k < n; ++k) x[k] = std::sin(2 * std::numbers::pi * double(k) / double(period));
  return x;
}

// Plug-in mutual information as H(A) + H(B) - H(A,B) from map-based counts.
double ami_oracle(const std::vector<double>& x, std::size_t lag, std::size_t bins) {
  const double lo = *std::min_element(x.begin(), x.end()), hi = *std::max_element(x.begin(), x.end());
  auto bin = [&](double v) { return std::min<long>(long(std::floor((v - lo) / (hi - lo) * double(bins))), long(bins) - 1); };
  std::map<long, double> a, b;
  std::map<std::pair<long, long>, double> ab;
  const std::size_t n = x.size() - lag;
  for (std::size_t t = 0; t < n; ++t) {
    a[bin(x[t])] += 1;
    b[bin(x[t + lag])] += 1;
    ab[{bin(x[t]), bin(x[t + lag])}] += 1;
  }
  auto entropy = [&](const auto& m) {
    double h = 0;
    for (const auto& [k, c] : m) h -= c / double(n) * std::log(c / double(n));
    return h;
  };
  return entropy(a) + entropy(b) - entropy(ab);
}

// Kennel false-neighbour fraction from explicit delay vectors.
double fnn_oracle(const std::vector<double>& x, std::size_t lag, std::size_t dim, double rtol, double atol) {
  const std::size_t m = x.size() - dim * lag;
  std::vector<std::vector<double>> v(m), w(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < dim; ++k) v[i].push_back(x[i + k * lag]);
    w[i] = v[i];
    w[i].push_back(x[i + dim * lag]);
  }
  double mean = 0;
  for (double e : x) mean += e;
  mean /= double(x.size());
  double var = 0;
  for (double e : x) var += (e - mean) * (e - mean);
  const double ra = std::sqrt(var / double(x.size()));
  auto d2 = [](const std::vector<double>& p, const std::vector<double>& q, std::size_t len) {
    double s = 0;
    for (std::size_t k = 0; k < len; ++k) s += (p[k] - q[k]) * (p[k] - q[k]);
    return s;
  };
  std::size_t fals = 0, counted = 0;
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t nn = m;
    double best = INFINITY;
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      const double d = d2(v[i], v[j], dim);
      if (d > 0 && d < best) best = d, nn = j;
    }
    if (nn == m) continue;
    ++counted;
    const double rd = std::sqrt(best);
    const double rd1 = std::sqrt(d2(w[i], w[nn], dim + 1));
    const double extra = std::abs(w[i][dim] - w[nn][dim]);
    if (extra / rd > rtol || rd1 / ra > atol) ++fals;
  }
  return counted ? double(fals) / double(counted) : 0.0;
}

}  // namespace

TEST(DelayEmbed, SmallSeriesByDefinition) {
  const std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto pc = delay_embed(x, {3, 2});
  ASSERT_EQ(pc.size(), 6u);
  for (std::size_t k = 0; k < 6; ++k) {
    EXPECT_EQ(pc.point(k)[0], double(k + 1));
    EXPECT_EQ(pc.point(k)[1], double(k + 3));
    EXPECT_EQ(pc.point(k)[2], double(k + 5));
  }
}

TEST(DelayEmbed, PointCountsForStandardParameters) {
  EXPECT_EQ(embedded_count(128, {8, 10}), 58u);
  EXPECT_EQ(embedded_count(64, {3, 5}), 54u);
  EXPECT_EQ(delay_embed(std::vector<double>(128, 0.0), {8, 10}).size(), 58u);
  EXPECT_EQ(delay_embed(std::vector<double>(64, 0.0), {3, 5}).size(), 54u);
}

TEST(DelayEmbed, RejectsTooShortOrZeroParameters) {
  EXPECT_THROW(embedded_count(70, {8, 10}), ParameterError);
  EXPECT_THROW(embedded_count(100, {0, 10}), ParameterError);
  EXPECT_THROW(embedded_count(100, {3, 0}), ParameterError);
  EXPECT_EQ(embedded_count(71, {8, 10}), 1u);
}

TEST(DelayEmbed, FromSegment) {
  Segment s;
  s.samples = {0, 1, 2, 3, 4};
  EXPECT_EQ(delay_embed(s, {2, 1}).size(), 4u);
}

TEST(Ami, UniformNoiseHasLowInformation) {
  Rng rng(derive_seed(1u, 2u));
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> x(10000);
  for (auto& v : x) v = u(rng);
  const auto sel = ami_lag(x, 20);
  for (double a : sel.ami) EXPECT_LT(a, 0.05);
}

TEST(Ami, SineFirstMinimumNearQuarterPeriod) {
  const auto x = exact_sine(128, 4096);
  const auto sel = ami_lag(x, 60);
  EXPECT_NEAR(double(sel.lag), 32.0, 2.0);
}

TEST(Ami, SineTwoBinCurveBottomsAtQuarterPeriod) {
  const auto x = exact_sine(128, 4096);
  const auto sel = ami_lag(x, 60, 2);
  EXPECT_EQ(sel.lag, 32u);
  EXPECT_EQ(std::size_t(std::min_element(sel.ami.begin(), sel.ami.end()) - sel.ami.begin()) + 1, 32u);
}

TEST(Ami, MatchesEntropyOracle) {
  Rng rng(derive_seed(5u, 3u));
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(300);
    double prev = 0;
    for (auto& v : x) v = prev = 0.8 * prev + g(rng);
    for (std::size_t lag : {1u, 3u, 7u})
      for (std::size_t bins : {4u, 16u})
        EXPECT_NEAR(average_mutual_information(x, lag, bins), ami_oracle(x, lag, bins), 1e-12);
  }
}

TEST(Ami, ConstantSeriesIsDegenerate) {
  EXPECT_THROW(ami_lag(std::vector<double>(100, 3.0), 10), DegenerateInputError);
}

TEST(Fnn, NoiselessSineUnfoldsInTwoDimensions) {
  const auto x = exact_sine(64, 2048);
  EXPECT_LT(fnn_fraction(x, 16, 2), 0.05);
}

TEST(Fnn, LorenzNeedsFewDimensions) {
  SynthParams p;
  p.length = 3000;
  const auto ts = synth(SynthKind::lorenz_x, p, 4);
  std::vector<double> x(ts.samples().begin(), ts.samples().end());
  const auto lag = ami_lag(x, 40).lag;
  EXPECT_LE(fnn_dim(x, lag, 10).dim, 5u);
}

TEST(Fnn, WhiteNoiseAtDimensionOneIsMostlyFalse) {
  SynthParams p;
  p.length = 1000;
  const auto ts = synth(SynthKind::white_noise, p, 8);
  EXPECT_GT(fnn_fraction(ts.samples(), 1, 1), 0.5);
}

TEST(Fnn, MatchesExplicitVectorOracle) {
  Rng rng(derive_seed(6u, 1u));
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> x(200);
    double prev = 0;
    for (auto& v : x) v = prev = 0.6 * prev + g(rng);
    for (std::size_t lag : {1u, 2u, 5u})
      for (std::size_t dim : {1u, 2u, 4u}) EXPECT_EQ(fnn_fraction(x, lag, dim), fnn_oracle(x, lag, dim, 15.0, 2.0));
  }
}

TEST(Fnn, CurveAndSelection) {
  const auto x = exact_sine(64, 1024);
  const auto sel = fnn_dim(x, 16, 6);
  ASSERT_EQ(sel.fnn.size(), 6u);
  EXPECT_LE(sel.dim, 2u);
  EXPECT_THROW(fnn_dim(x, 16, 1), ParameterError);
  EXPECT_THROW(fnn_fraction(std::vector<double>(100, 1.0), 1, 2), DegenerateInputError);
}

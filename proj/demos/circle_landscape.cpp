// Persistence of a noisy circle and its first H1 landscape, printed as text.

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "topoeeg/homology.hpp"
#include "topoeeg/landscapes.hpp"
#include "topoeeg/pipeline/plotdata.hpp"
#include "topoeeg/random.hpp"

int main() {
  using namespace topoeeg;
  Rng rng(derive_seed(7u, 1u));
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<double> xy;
  for (int i = 0; i < 40; ++i) {
    const double a = 2 * std::numbers::pi * i / 40.0;
    xy.push_back(std::cos(a) + noise(rng));
    xy.push_back(std::sin(a) + noise(rng));
  }
  const auto dg = rips_persistence(PointCloud(2, std::move(xy)), HomologyDims{0, 1});
  std::fputs(diagram_tsv(dg).c_str(), stdout);
  const auto L = landscape(dg, 1, 1, 20, dg.threshold);
  std::fputs(landscape_tsv(L).c_str(), stdout);
}

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "topoeeg/errors.hpp"

namespace topoeeg {

/// A set of m points in R^d, stored row-major.
class PointCloud {
 public:
  PointCloud() = default;

  PointCloud(std::size_t dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
    if (dim_ == 0) throw ParameterError("point cloud dimension must be >= 1");
    if (coords_.size() % dim_ != 0)
      throw ParameterError("point cloud coordinate count is not a multiple of the dimension");
    for (double c : coords_)
      if (!std::isfinite(c)) throw ParameterError("point cloud coordinates must be finite");
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  bool empty() const noexcept { return size() == 0; }

  std::span<const double> point(std::size_t i) const noexcept {
    return {coords_.data() + i * dim_, dim_};
  }

  const std::vector<double>& coords() const noexcept { return coords_; }

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
};

inline double euclidean(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace topoeeg

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "w2lab/errors.hpp"

namespace w2lab {

using Vector = std::vector<double>;

/// Row-major list of points sharing one dimension.
class PointCloud {
 public:
  PointCloud() = default;
  PointCloud(std::size_t dim, std::size_t count) : dim_(dim), coords_(dim * count, 0.0) {
    if (dim == 0) throw InvalidArgument("PointCloud: dimension must be positive");
  }
  PointCloud(std::size_t dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
    if (dim == 0) throw InvalidArgument("PointCloud: dimension must be positive");
    if (coords_.size() % dim != 0) throw InvalidArgument("PointCloud: coordinate count not a multiple of dim");
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  bool empty() const noexcept { return coords_.empty(); }

  std::span<const double> point(std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }
  std::span<double> point(std::size_t i) { return {coords_.data() + i * dim_, dim_}; }

  double operator()(std::size_t i, std::size_t j) const { return coords_[i * dim_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return coords_[i * dim_ + j]; }

  void push_back(std::span<const double> p) {
    if (dim_ == 0) dim_ = p.size();
    if (p.size() != dim_) throw InvalidArgument("PointCloud: point dimension mismatch");
    coords_.insert(coords_.end(), p.begin(), p.end());
  }

  /// Values of coordinate j across all points.
  Vector column(std::size_t j) const {
    Vector out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (*this)(i, j);
    return out;
  }

  const std::vector<double>& raw() const noexcept { return coords_; }

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
};

}  // namespace w2lab

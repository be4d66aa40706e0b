#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "surfsl/types.hpp"

namespace surfsl {

/// Uniform bucket grid over a fixed point set. Supports fixed-radius ball
/// queries, nearest-neighbour and k-th neighbour distance queries.
class SpatialGrid {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  SpatialGrid() = default;
  SpatialGrid(std::span<const Vec3> points, double cell_size);

  std::size_t size() const { return points_.size(); }
  double cell_size() const { return cell_; }

  /// Indices j with |x_j - center|^2 <= radius^2, ascending. `out` is cleared first.
  void ball(const Vec3& center, double radius, std::vector<std::size_t>& out) const;

  /// Nearest point to x, optionally skipping one index. Returns (index, distance).
  std::pair<std::size_t, double> nearest(const Vec3& x, std::size_t skip = npos) const;

  /// Distance from x to its k-th nearest point (k >= 1, counting a coincident point).
  double kth_distance(const Vec3& x, std::size_t k) const;

 private:
  std::array<int, 3> cell_of(const Vec3& x) const;
  std::size_t flat(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * dims_[1] + j) * dims_[0] + i;
  }

  std::vector<Vec3> points_;
  Vec3 origin_ = Vec3::Zero();
  double cell_ = 1.0;
  std::array<int, 3> dims_{1, 1, 1};
  std::vector<std::uint32_t> cell_start_;
  std::vector<std::uint32_t> order_;
};

}  // namespace surfsl

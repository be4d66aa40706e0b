#include "surfsl/spatial_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "surfsl/errors.hpp"

namespace surfsl {

SpatialGrid::SpatialGrid(std::span<const Vec3> points, double cell_size)
    : points_(points.begin(), points.end()) {
  if (points_.empty()) fail(ErrorCode::InvalidArgument, "spatial grid over an empty point set");
  if (points_.size() >= std::numeric_limits<std::uint32_t>::max()) {
    fail(ErrorCode::InvalidArgument, "too many points for spatial grid");
  }
  Vec3 lo = points_.front(), hi = points_.front();
  for (const Vec3& p : points_) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec3 extent = (hi - lo).cwiseMax(Vec3::Constant(1e-12));
  cell_ = cell_size > 0.0 ? cell_size : extent.maxCoeff();
  // Cap the number of cells at a few per point.
  const double max_cells = 8.0 * static_cast<double>(points_.size()) + 64.0;
  while ((std::floor(extent.x() / cell_) + 1) * (std::floor(extent.y() / cell_) + 1) *
             (std::floor(extent.z() / cell_) + 1) >
         max_cells) {
    cell_ *= 1.25;
  }
  origin_ = lo;
  for (int d = 0; d < 3; ++d) dims_[d] = static_cast<int>(std::floor(extent[d] / cell_)) + 1;

  const std::size_t ncells = static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
  std::vector<std::uint32_t> cell_id(points_.size());
  cell_start_.assign(ncells + 1, 0);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto c = cell_of(points_[i]);
    cell_id[i] = static_cast<std::uint32_t>(flat(c[0], c[1], c[2]));
    ++cell_start_[cell_id[i] + 1];
  }
  for (std::size_t c = 0; c < ncells; ++c) cell_start_[c + 1] += cell_start_[c];
  order_.resize(points_.size());
  std::vector<std::uint32_t> fill(cell_start_.begin(), cell_start_.end() - 1);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    order_[fill[cell_id[i]]++] = static_cast<std::uint32_t>(i);
  }
}

std::array<int, 3> SpatialGrid::cell_of(const Vec3& x) const {
  std::array<int, 3> c{};
  for (int d = 0; d < 3; ++d) {
    const double v = std::floor((x[d] - origin_[d]) / cell_);
    c[d] = static_cast<int>(std::clamp(v, 0.0, static_cast<double>(dims_[d] - 1)));
  }
  return c;
}

void SpatialGrid::ball(const Vec3& center, double radius, std::vector<std::size_t>& out) const {
  out.clear();
  if (!(radius >= 0.0)) return;
  std::array<int, 3> lo{}, hi{};
  for (int d = 0; d < 3; ++d) {
    const double a = std::floor((center[d] - radius - origin_[d]) / cell_);
    const double b = std::floor((center[d] + radius - origin_[d]) / cell_);
    if (b < 0.0 || a > dims_[d] - 1) return;
    lo[d] = static_cast<int>(std::max(a, 0.0));
    hi[d] = static_cast<int>(std::min(b, static_cast<double>(dims_[d] - 1)));
  }
  const double r2 = radius * radius;
  for (int k = lo[2]; k <= hi[2]; ++k) {
    for (int j = lo[1]; j <= hi[1]; ++j) {
      for (int i = lo[0]; i <= hi[0]; ++i) {
        const std::size_t c = flat(i, j, k);
        for (std::uint32_t s = cell_start_[c]; s < cell_start_[c + 1]; ++s) {
          const std::uint32_t idx = order_[s];
          if ((points_[idx] - center).squaredNorm() <= r2) out.push_back(idx);
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
}

std::pair<std::size_t, double> SpatialGrid::nearest(const Vec3& x, std::size_t skip) const {
  const auto base = cell_of(x);
  // Distance from x to the base cell box; rings are measured from that box.
  double out2 = 0.0;
  for (int d = 0; d < 3; ++d) {
    const double lo = origin_[d] + base[d] * cell_;
    const double hi = lo + cell_;
    const double e = x[d] < lo ? lo - x[d] : (x[d] > hi ? x[d] - hi : 0.0);
    out2 += e * e;
  }
  const double outside = std::sqrt(out2);
  const int max_ring = std::max({dims_[0], dims_[1], dims_[2]});

  std::size_t best = npos;
  double best2 = std::numeric_limits<double>::infinity();
  for (int ring = 0; ring <= max_ring; ++ring) {
    for (int k = base[2] - ring; k <= base[2] + ring; ++k) {
      if (k < 0 || k >= dims_[2]) continue;
      for (int j = base[1] - ring; j <= base[1] + ring; ++j) {
        if (j < 0 || j >= dims_[1]) continue;
        for (int i = base[0] - ring; i <= base[0] + ring; ++i) {
          if (i < 0 || i >= dims_[0]) continue;
          const int cheb = std::max({std::abs(i - base[0]), std::abs(j - base[1]), std::abs(k - base[2])});
          if (cheb != ring) continue;
          const std::size_t c = flat(i, j, k);
          for (std::uint32_t s = cell_start_[c]; s < cell_start_[c + 1]; ++s) {
            const std::uint32_t idx = order_[s];
            if (idx == skip) continue;
            const double d2 = (points_[idx] - x).squaredNorm();
            if (d2 < best2 || (d2 == best2 && idx < best)) {
              best2 = d2;
              best = idx;
            }
          }
        }
      }
    }
    // Every point in ring+1 or beyond is at least ring*cell - outside away.
    const double bound = ring * cell_ - outside;
    if (best != npos && bound > 0.0 && best2 < bound * bound) break;
  }
  return {best, std::sqrt(best2)};
}

double SpatialGrid::kth_distance(const Vec3& x, std::size_t k) const {
  if (k == 0 || k > points_.size()) fail(ErrorCode::InvalidArgument, "k-th neighbour out of range");
  std::vector<std::size_t> idx;
  double r = cell_;
  for (;;) {
    ball(x, r, idx);
    if (idx.size() >= k || idx.size() == points_.size()) break;
    r *= 2.0;
  }
  std::vector<double> d(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) d[i] = (points_[idx[i]] - x).norm();
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k - 1), d.end());
  return d[k - 1];
}

}  // namespace surfsl

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "surfsl/geometry.hpp"
#include "surfsl/spatial_grid.hpp"

namespace surfsl {

/// Immutable node set X on a manifold with a spatial index, its separation
/// distance q_X and (once measured) its fill distance h_X.
class PointCloud {
 public:
  /// Throws NotOnManifold if a point misses the manifold by more than 1e-10
  /// (relative residual), InvalidArgument on duplicate points.
  PointCloud(Manifold manifold, std::vector<Vec3> points);

  const Manifold& manifold() const { return manifold_; }
  std::span<const Vec3> points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  const Vec3& operator[](std::size_t i) const { return points_[i]; }

  double separation() const { return separation_; }
  std::optional<double> fill_distance() const { return fill_distance_; }
  void set_fill_distance(double h);
  /// h_X / q_X, once h_X is known.
  std::optional<double> rho() const;

  /// Indices with |x_j - center| <= radius, ascending.
  std::vector<std::size_t> ball_query(const Vec3& center, double radius) const;
  void ball_query(const Vec3& center, double radius, std::vector<std::size_t>& out) const;
  std::pair<std::size_t, double> nearest(const Vec3& x) const { return grid_.nearest(x); }
  double kth_neighbor_distance(const Vec3& x, std::size_t k) const { return grid_.kth_distance(x, k); }

 private:
  Manifold manifold_;
  std::vector<Vec3> points_;
  SpatialGrid grid_;
  double separation_ = 0.0;
  std::optional<double> fill_distance_;
};

struct NodeGenOptions {
  int max_iterations = 200;
  double max_rho = 4.0;
  /// Uniform probe sample size (multiple of n) used to estimate h_X for the rho check.
  double probe_factor = 20.0;
  /// Repulsion step relative to the target spacing.
  double step = 0.05;
};

/// Quasi-uniform nodes: area-uniform random seeding followed by tangential
/// short-range repulsion with retraction. Deterministic for a fixed seed.
/// The returned cloud caches the probe estimate of h_X.
PointCloud generate_nodes(const Manifold& m, std::size_t n, std::uint64_t seed,
                          const NodeGenOptions& opts = {});

/// Uniform (area-weighted) random sample on the manifold, no repulsion.
std::vector<Vec3> sample_uniform(const Manifold& m, std::size_t n, std::uint64_t seed);

/// max over samples of the distance to the nearest cloud point.
double fill_distance(const PointCloud& cloud, std::span<const Vec3> samples);
/// As above, enforcing dense.size() >= 20 * cloud.size().
double fill_distance(const PointCloud& cloud, const PointCloud& dense);

/// Minimum pairwise distance (0 if the set has duplicates). Requires >= 2 points.
double separation_distance(std::span<const Vec3> points);

/// CSV with header `x,y,z`, 17 significant digits.
void write_points_csv(std::ostream& os, std::span<const Vec3> points);
void write_points_csv(const std::string& path, std::span<const Vec3> points);
std::vector<Vec3> read_points_csv(std::istream& is);
std::vector<Vec3> read_points_csv(const std::string& path);

}  // namespace surfsl

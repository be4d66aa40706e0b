#include "surfsl/pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include "surfsl/errors.hpp"

namespace surfsl {
namespace {

constexpr double kResidualTol = 1e-10;

double default_cell(std::span<const Vec3> pts) {
  Vec3 lo = pts.front(), hi = pts.front();
  for (const Vec3& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double extent = std::max((hi - lo).maxCoeff(), 1e-12);
  return extent / std::sqrt(static_cast<double>(pts.size()));
}

double uniform01(std::mt19937_64& rng) {
  // 53 random bits, independent of the standard library's distribution code.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Vec3 sample_sphere(const SphereShape& s, std::mt19937_64& rng) {
  for (;;) {
    const Vec3 u(2.0 * uniform01(rng) - 1.0, 2.0 * uniform01(rng) - 1.0, 2.0 * uniform01(rng) - 1.0);
    const double r2 = u.squaredNorm();
    if (r2 <= 1.0 && r2 > 1e-6) return (s.radius / std::sqrt(r2)) * u;
  }
}

Vec3 sample_torus(const TorusShape& t, std::mt19937_64& rng) {
  using std::numbers::pi;
  const double ratio = t.inner / t.outer;
  for (;;) {
    const double lambda = 2.0 * pi * uniform01(rng) - pi;
    const double phi = 2.0 * pi * uniform01(rng) - pi;
    const double accept = uniform01(rng) * (1.0 + ratio);
    if (accept > 1.0 + ratio * std::cos(phi)) continue;
    const double ring = t.outer + t.inner * std::cos(phi);
    return {ring * std::cos(lambda), ring * std::sin(lambda), t.inner * std::sin(phi)};
  }
}

// Returns the sample and an area estimate (accepted tube volume / thickness).
std::vector<Vec3> sample_level_set(const Manifold& m, const LevelSetShape& l, std::size_t n,
                                   std::mt19937_64& rng, double* area) {
  const double half = 0.5 * m.tube().delta;
  const Vec3 ext = l.box_max - l.box_min;
  std::vector<Vec3> out;
  out.reserve(n);
  std::size_t tries = 0;
  const std::size_t max_tries = 1000 * n + 100000;
  while (out.size() < n) {
    if (++tries > max_tries) fail(ErrorCode::GenerationFailed, "level set seeding found too few tube points");
    const Vec3 u(uniform01(rng), uniform01(rng), uniform01(rng));
    const Vec3 x = l.box_min + ext.cwiseProduct(u);
    if (m.distance_estimate(x) >= half) continue;
    out.push_back(m.retract(x));
  }
  if (area) {
    const double vol = ext.prod();
    *area = static_cast<double>(n) / static_cast<double>(tries) * vol / (2.0 * half);
  }
  return out;
}

}  // namespace

PointCloud::PointCloud(Manifold manifold, std::vector<Vec3> points)
    : manifold_(std::move(manifold)), points_(std::move(points)) {
  if (points_.empty()) fail(ErrorCode::InvalidArgument, "empty point cloud");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const double res = std::abs(manifold_.defining_residual(points_[i]));
    if (!(res <= kResidualTol)) {
      std::ostringstream os;
      os << "point " << i << " has manifold residual " << res;
      fail(ErrorCode::NotOnManifold, os.str());
    }
  }
  grid_ = SpatialGrid(points_, default_cell(points_));
  if (points_.size() >= 2) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points_.size(); ++i) {
      best = std::min(best, grid_.nearest(points_[i], i).second);
    }
    separation_ = best;
    if (!(separation_ > 0.0)) fail(ErrorCode::InvalidArgument, "point cloud contains duplicate points");
  } else {
    separation_ = std::numeric_limits<double>::infinity();
  }
}

void PointCloud::set_fill_distance(double h) {
  if (!(h >= 0.0)) fail(ErrorCode::InvalidArgument, "fill distance must be nonnegative");
  fill_distance_ = h;
}

std::optional<double> PointCloud::rho() const {
  if (!fill_distance_) return std::nullopt;
  return *fill_distance_ / separation_;
}

std::vector<std::size_t> PointCloud::ball_query(const Vec3& center, double radius) const {
  std::vector<std::size_t> out;
  ball_query(center, radius, out);
  return out;
}

void PointCloud::ball_query(const Vec3& center, double radius, std::vector<std::size_t>& out) const {
  if (!(radius > 0.0)) fail(ErrorCode::InvalidArgument, "ball radius must be positive");
  grid_.ball(center, radius, out);
}

std::vector<Vec3> sample_uniform(const Manifold& m, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Vec3> pts;
  pts.reserve(n);
  if (const auto* s = std::get_if<SphereShape>(&m.shape())) {
    for (std::size_t i = 0; i < n; ++i) pts.push_back(sample_sphere(*s, rng));
  } else if (const auto* t = std::get_if<TorusShape>(&m.shape())) {
    for (std::size_t i = 0; i < n; ++i) pts.push_back(sample_torus(*t, rng));
  } else {
    pts = sample_level_set(m, std::get<LevelSetShape>(m.shape()), n, rng, nullptr);
  }
  return pts;
}

PointCloud generate_nodes(const Manifold& m, std::size_t n, std::uint64_t seed, const NodeGenOptions& opts) {
  if (n < 4) fail(ErrorCode::InvalidArgument, "node generation needs at least 4 points");
  std::mt19937_64 rng(seed);

  std::vector<Vec3> pts;
  double area = m.area();
  if (const auto* l = std::get_if<LevelSetShape>(&m.shape())) {
    pts = sample_level_set(m, *l, n, rng, &area);
  } else {
    pts = sample_uniform(m, n, rng());
  }

  // Target spacing of a hexagonal packing with n points.
  const double spacing = std::sqrt(2.0 * area / (std::sqrt(3.0) * static_cast<double>(n)));
  const double cutoff = 3.0 * spacing;
  const double cutoff2 = cutoff * cutoff;
  const double tail = 1.0 / 9.0;
  const double max_move = 0.25 * spacing;

  std::vector<Vec3> next(pts.size());
  std::vector<std::size_t> nbr;
  for (int it = 0; it < opts.max_iterations; ++it) {
    SpatialGrid grid(pts, cutoff);
    double largest = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      grid.ball(pts[i], cutoff, nbr);
      Vec3 force = Vec3::Zero();
      for (std::size_t j : nbr) {
        if (j == i) continue;
        const Vec3 d = pts[i] - pts[j];
        const double r2 = d.squaredNorm();
        if (r2 >= cutoff2 || r2 == 0.0) continue;
        const double r = std::sqrt(r2);
        force += (spacing * spacing / r2 - tail) / r * d;
      }
      const Vec3 nrm = m.normal(pts[i]);
      Vec3 move = opts.step * spacing * (force - force.dot(nrm) * nrm);
      const double len = move.norm();
      if (len > max_move) move *= max_move / len;
      largest = std::max(largest, std::min(len, max_move));
      next[i] = m.is_level_set() ? m.retract(pts[i] + move) : m.closest_point(pts[i] + move);
    }
    pts.swap(next);
    if (largest < 1e-4 * spacing) break;
  }

  PointCloud cloud(m, std::move(pts));
  const auto probe_n = static_cast<std::size_t>(std::ceil(opts.probe_factor * static_cast<double>(n)));
  const auto probe = sample_uniform(m, probe_n, rng());
  const double h = fill_distance(cloud, probe);
  cloud.set_fill_distance(h);
  if (*cloud.rho() > opts.max_rho) {
    std::ostringstream os;
    os << "quasi-uniformity ratio " << *cloud.rho() << " exceeds " << opts.max_rho;
    fail(ErrorCode::GenerationFailed, os.str());
  }
  return cloud;
}

double fill_distance(const PointCloud& cloud, std::span<const Vec3> samples) {
  double h = 0.0;
  for (const Vec3& x : samples) h = std::max(h, cloud.nearest(x).second);
  return h;
}

double fill_distance(const PointCloud& cloud, const PointCloud& dense) {
  if (dense.size() < 20 * cloud.size()) {
    fail(ErrorCode::InvalidArgument, "dense sample must have at least 20x the cloud's points");
  }
  return fill_distance(cloud, dense.points());
}

double separation_distance(std::span<const Vec3> points) {
  if (points.size() < 2) fail(ErrorCode::InvalidArgument, "separation distance needs two points");
  SpatialGrid grid(points, default_cell(points));
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) best = std::min(best, grid.nearest(points[i], i).second);
  return best;
}

void write_points_csv(std::ostream& os, std::span<const Vec3> points) {
  os << "x,y,z\n" << std::setprecision(17);
  for (const Vec3& p : points) os << p.x() << ',' << p.y() << ',' << p.z() << '\n';
}

void write_points_csv(const std::string& path, std::span<const Vec3> points) {
  std::ofstream os(path);
  if (!os) fail(ErrorCode::InvalidArgument, "cannot open " + path);
  write_points_csv(os, points);
}

std::vector<Vec3> read_points_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) fail(ErrorCode::InvalidArgument, "empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x,y,z") fail(ErrorCode::InvalidArgument, "expected CSV header x,y,z");
  std::vector<Vec3> pts;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    std::istringstream ls(line);
    Vec3 p;
    char c1 = 0, c2 = 0;
    if (!(ls >> p.x() >> c1 >> p.y() >> c2 >> p.z()) || c1 != ',' || c2 != ',') {
      fail(ErrorCode::InvalidArgument, "malformed CSV row: " + line);
    }
    pts.push_back(p);
  }
  return pts;
}

std::vector<Vec3> read_points_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::InvalidArgument, "cannot open " + path);
  return read_points_csv(is);
}

}  // namespace surfsl

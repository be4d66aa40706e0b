#include "surfsl/geometry.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "surfsl/errors.hpp"

namespace surfsl {
namespace {

// Relative distance below which a point counts as sitting on a singular
// locus of the closest-point map.
constexpr double kSingularTol = 1e-12;
constexpr int kNewtonMaxIter = 50;
constexpr double kNewtonTol = 1e-13;
constexpr double kDefaultTubeFraction = 0.9;
constexpr double kOnManifoldTol = 1e-10;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Center of the tube circle nearest to x (torus); requires x off the z-axis.
Vec3 ring_center(const TorusShape& t, const Vec3& x) {
  const double rho = std::hypot(x.x(), x.y());
  if (rho <= kSingularTol * t.outer) {
    fail(ErrorCode::SingularProjection, "point on the torus symmetry axis");
  }
  return {t.outer * x.x() / rho, t.outer * x.y() / rho, 0.0};
}

}  // namespace

Manifold Manifold::sphere(double radius) {
  if (!(radius > 0.0)) fail(ErrorCode::InvalidArgument, "sphere radius must be positive");
  return Manifold(SphereShape{radius}, TubeSpec{kDefaultTubeFraction * radius});
}

Manifold Manifold::torus(double outer, double inner) {
  if (!(inner > 0.0) || !(outer > inner)) {
    fail(ErrorCode::InvalidArgument, "torus requires outer > inner > 0");
  }
  return Manifold(TorusShape{outer, inner}, TubeSpec{kDefaultTubeFraction * inner});
}

Manifold Manifold::level_set(std::function<double(const Vec3&)> f,
                             std::function<Vec3(const Vec3&)> grad, double delta,
                             Vec3 box_min, Vec3 box_max) {
  if (!f || !grad) fail(ErrorCode::InvalidArgument, "level set needs f and grad f");
  if (!(delta > 0.0)) fail(ErrorCode::InvalidArgument, "tube half-width must be positive");
  if ((box_max - box_min).minCoeff() <= 0.0) {
    fail(ErrorCode::InvalidArgument, "empty level-set bounding box");
  }
  return Manifold(LevelSetShape{std::move(f), std::move(grad), box_min, box_max},
                  TubeSpec{delta});
}

void Manifold::set_tube(TubeSpec tube) {
  if (!(tube.delta > 0.0)) fail(ErrorCode::InvalidArgument, "tube half-width must be positive");
  tube_ = tube;
}

std::string Manifold::name() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(overloaded{
                 [&](const SphereShape& s) { os << "sphere(" << s.radius << ")"; },
                 [&](const TorusShape& t) { os << "torus(" << t.outer << "," << t.inner << ")"; },
                 [&](const LevelSetShape&) { os << "level_set"; },
             },
             shape_);
  return os.str();
}

double Manifold::reach() const {
  return std::visit(overloaded{
                        [](const SphereShape& s) { return s.radius; },
                        [](const TorusShape& t) { return t.inner; },
                        [](const LevelSetShape&) { return 0.0; },
                    },
                    shape_);
}

double Manifold::area() const {
  using std::numbers::pi;
  return std::visit(overloaded{
                        [](const SphereShape& s) { return 4.0 * pi * s.radius * s.radius; },
                        [](const TorusShape& t) { return 4.0 * pi * pi * t.outer * t.inner; },
                        [](const LevelSetShape&) { return 0.0; },
                    },
                    shape_);
}

double Manifold::scale() const {
  return std::visit(overloaded{
                        [](const SphereShape& s) { return s.radius; },
                        [](const TorusShape& t) { return t.outer + t.inner; },
                        [](const LevelSetShape& l) { return 0.5 * (l.box_max - l.box_min).norm(); },
                    },
                    shape_);
}

double Manifold::defining_residual(const Vec3& x) const {
  return std::visit(overloaded{
                        [&](const SphereShape& s) {
                          return (x.squaredNorm() - s.radius * s.radius) / (s.radius * s.radius);
                        },
                        [&](const TorusShape& t) {
                          const double d = std::hypot(x.x(), x.y()) - t.outer;
                          return (d * d + x.z() * x.z() - t.inner * t.inner) / (t.inner * t.inner);
                        },
                        [&](const LevelSetShape& l) { return l.f(x); },
                    },
                    shape_);
}

double Manifold::distance_estimate(const Vec3& x) const {
  return std::visit(overloaded{
                        [&](const SphereShape& s) { return std::abs(x.norm() - s.radius); },
                        [&](const TorusShape& t) {
                          const double d = std::hypot(x.x(), x.y()) - t.outer;
                          return std::abs(std::hypot(d, x.z()) - t.inner);
                        },
                        [&](const LevelSetShape& l) {
                          const double g = l.grad(x).norm();
                          if (g == 0.0) return std::numeric_limits<double>::infinity();
                          return std::abs(l.f(x)) / g;
                        },
                    },
                    shape_);
}

bool Manifold::in_tube(const Vec3& x) const { return distance_estimate(x) < tube_.delta; }

Vec3 Manifold::closest_point(const Vec3& x) const {
  return std::visit(overloaded{
                        [&](const SphereShape& s) -> Vec3 {
                          const double r = x.norm();
                          if (r <= kSingularTol * s.radius) {
                            fail(ErrorCode::SingularProjection, "point at the sphere center");
                          }
                          return (s.radius / r) * x;
                        },
                        [&](const TorusShape& t) -> Vec3 {
                          const Vec3 c = ring_center(t, x);
                          const Vec3 d = x - c;
                          const double dn = d.norm();
                          if (dn <= kSingularTol * t.inner) {
                            fail(ErrorCode::SingularProjection, "point on the torus core circle");
                          }
                          return c + (t.inner / dn) * d;
                        },
                        [&](const LevelSetShape& l) -> Vec3 {
                          if (!in_tube(x)) fail(ErrorCode::OutsideTube, "level-set point outside tube");
                          return newton_project(l, x);
                        },
                    },
                    shape_);
}

Vec3 Manifold::retract(const Vec3& x) const {
  if (!in_tube(x)) {
    std::ostringstream os;
    os << "distance " << distance_estimate(x) << " exceeds tube half-width " << tube_.delta;
    fail(ErrorCode::OutsideTube, os.str());
  }
  return closest_point(x);
}

Vec3 Manifold::newton_project(const LevelSetShape& l, const Vec3& x0) const {
  Vec3 x = x0;
  double fx = l.f(x);
  for (int it = 0; it < kNewtonMaxIter; ++it) {
    if (std::abs(fx) < kNewtonTol) return x;
    const Vec3 g = l.grad(x);
    const double g2 = g.squaredNorm();
    if (g2 == 0.0) fail(ErrorCode::SingularProjection, "vanishing level-set gradient");
    const Vec3 step = (fx / g2) * g;
    // Damping: halve the step until |f| decreases.
    double lambda = 1.0;
    Vec3 trial = x - step;
    double ft = l.f(trial);
    for (int k = 0; k < 10 && std::abs(ft) >= std::abs(fx); ++k) {
      lambda *= 0.5;
      trial = x - lambda * step;
      ft = l.f(trial);
    }
    x = trial;
    fx = ft;
  }
  if (std::abs(fx) < kNewtonTol) return x;
  fail(ErrorCode::NoConvergence, "level-set Newton projection did not converge in 50 iterations");
}

Vec3 Manifold::normal(const Vec3& x) const {
  return std::visit(overloaded{
                        [&](const SphereShape& s) -> Vec3 {
                          const double r = x.norm();
                          if (r <= kSingularTol * s.radius) {
                            fail(ErrorCode::SingularProjection, "normal at sphere center");
                          }
                          return x / r;
                        },
                        [&](const TorusShape& t) -> Vec3 {
                          const Vec3 d = x - ring_center(t, x);
                          const double dn = d.norm();
                          if (dn <= kSingularTol * t.inner) {
                            fail(ErrorCode::SingularProjection, "normal on torus core circle");
                          }
                          return d / dn;
                        },
                        [&](const LevelSetShape& l) -> Vec3 {
                          const Vec3 g = l.grad(x);
                          const double gn = g.norm();
                          if (gn == 0.0) fail(ErrorCode::SingularProjection, "vanishing gradient");
                          return g / gn;
                        },
                    },
                    shape_);
}

Mat3 Manifold::tangent_projector(const Vec3& x) const {
  if (!(distance_estimate(x) <= kOnManifoldTol * std::max(1.0, scale()))) {
    fail(ErrorCode::NotOnManifold, "tangent projector requested off the manifold");
  }
  const Vec3 n = normal(x);
  return Mat3::Identity() - n * n.transpose();
}

}  // namespace surfsl

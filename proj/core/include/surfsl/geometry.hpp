#pragma once

#include <functional>
#include <string>
#include <variant>

#include "surfsl/types.hpp"

namespace surfsl {

struct SphereShape {
  double radius = 1.0;
};

/// Ring torus: `outer` is the distance from the z-axis to the tube center,
/// `inner` is the tube radius.
struct TorusShape {
  double outer = 1.0;
  double inner = 1.0 / 3.0;
};

struct LevelSetShape {
  std::function<double(const Vec3&)> f;
  std::function<Vec3(const Vec3&)> grad;
  /// Axis-aligned box enclosing the zero set; only used for node seeding.
  Vec3 box_min = Vec3::Constant(-1.0);
  Vec3 box_max = Vec3::Constant(1.0);
};

/// Half-width of the tube around the manifold inside which retractions are
/// trusted.
struct TubeSpec {
  double delta = 0.0;
};

/// Closed embedded surface in R^3 with closest-point, retraction and
/// tangent-projector capability.
class Manifold {
 public:
  using Shape = std::variant<SphereShape, TorusShape, LevelSetShape>;

  static Manifold sphere(double radius = 1.0);
  static Manifold torus(double outer = 1.0, double inner = 1.0 / 3.0);
  /// `delta` must be supplied: there is no analytic reach for a general level set.
  static Manifold level_set(std::function<double(const Vec3&)> f,
                            std::function<Vec3(const Vec3&)> grad, double delta,
                            Vec3 box_min = Vec3::Constant(-1.0),
                            Vec3 box_max = Vec3::Constant(1.0));

  const Shape& shape() const { return shape_; }
  bool is_sphere() const { return std::holds_alternative<SphereShape>(shape_); }
  bool is_torus() const { return std::holds_alternative<TorusShape>(shape_); }
  bool is_level_set() const { return std::holds_alternative<LevelSetShape>(shape_); }
  std::string name() const;

  static constexpr int ambient_dim = 3;
  static constexpr int intrinsic_dim = 2;

  const TubeSpec& tube() const { return tube_; }
  void set_tube(TubeSpec tube);

  /// Analytic reach (radius for spheres, inner radius for tori); 0 for level sets.
  double reach() const;
  /// Surface area; level sets return 0 (unknown).
  double area() const;
  /// Length scale used for relative tolerances.
  double scale() const;

  /// Defining equation normalised to be dimensionless, zero on the manifold.
  double defining_residual(const Vec3& x) const;
  /// Estimate of dist(x, M): exact for sphere/torus, |f|/|grad f| for level sets.
  double distance_estimate(const Vec3& x) const;

  Vec3 closest_point(const Vec3& x) const;
  /// Closest point for sphere/torus, damped Newton projection for level sets.
  /// Throws OutsideTube when x is farther than tube().delta from M.
  Vec3 retract(const Vec3& x) const;
  bool in_tube(const Vec3& x) const;

  /// Unit outward normal at a point on (or near) M.
  Vec3 normal(const Vec3& x) const;
  /// P = I - n n^T at a point on M; throws NotOnManifold otherwise.
  Mat3 tangent_projector(const Vec3& x) const;

 private:
  explicit Manifold(Shape shape, TubeSpec tube) : shape_(std::move(shape)), tube_(tube) {}

  Vec3 newton_project(const LevelSetShape& ls, const Vec3& x) const;

  Shape shape_;
  TubeSpec tube_;
};

}  // namespace surfsl

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "surfsl/errors.hpp"
#include "surfsl/geometry.hpp"
#include "surfsl/pointcloud.hpp"

using namespace surfsl;

namespace {

double torus_residual(const Vec3& x, double R, double r) {
  const double rho = std::hypot(x.x(), x.y()) - R;
  return rho * rho + x.z() * x.z() - r * r;
}

Manifold unit_level_sphere() {
  return Manifold::level_set([](const Vec3& x) { return x.squaredNorm() - 1.0; },
                             [](const Vec3& x) { return Vec3(2.0 * x); }, 0.5);
}

}  // namespace

TEST(Geometry, ClosestPointExamples) {
  const Manifold s = Manifold::sphere(1.0);
  EXPECT_LT((s.closest_point(Vec3(2, 0, 0)) - Vec3(1, 0, 0)).norm(), 1e-15);
  EXPECT_LT((s.closest_point(Vec3(1, 1, 1)) - Vec3::Constant(1.0 / std::sqrt(3.0))).norm(), 1e-15);
  const Manifold t = Manifold::torus(1.0, 1.0 / 3.0);
  EXPECT_LT((t.closest_point(Vec3(2, 0, 0)) - Vec3(4.0 / 3.0, 0, 0)).norm(), 1e-15);
}

TEST(Geometry, SingularLociThrow) {
  const Manifold s = Manifold::sphere(1.0);
  try {
    s.closest_point(Vec3::Zero());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularProjection);
  }
  const Manifold t = Manifold::torus();
  EXPECT_THROW(t.closest_point(Vec3(0, 0, 0.2)), Error);
}

TEST(Geometry, TangentProjectorExamples) {
  const Manifold s = Manifold::sphere(1.0);
  Mat3 e = Mat3::Identity();
  e(2, 2) = 0.0;
  EXPECT_LT((s.tangent_projector(Vec3(0, 0, 1)) - e).cwiseAbs().maxCoeff(), 1e-15);
  const Mat3 px = Vec3(0, 1, 1).asDiagonal();
  EXPECT_LT((s.tangent_projector(Vec3(1, 0, 0)) - px).cwiseAbs().maxCoeff(), 1e-15);
  const Manifold t = Manifold::torus(1.0, 1.0 / 3.0);
  EXPECT_LT((t.tangent_projector(Vec3(4.0 / 3.0, 0, 0)) - px).cwiseAbs().maxCoeff(), 1e-15);
  try {
    s.tangent_projector(Vec3(1.1, 0, 0));
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::NotOnManifold);
  }
}

TEST(Geometry, ProjectorIdempotentSymmetric) {
  for (const Manifold& m : {Manifold::sphere(1.0), Manifold::torus()}) {
    for (const Vec3& x : sample_uniform(m, 1000, 7)) {
      const Mat3 P = m.tangent_projector(x);
      EXPECT_LT((P * P - P).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LT((P - P.transpose()).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LT((P * m.normal(x)).norm(), 1e-12);
    }
  }
}

TEST(Geometry, RetractExamples) {
  const Manifold s = Manifold::sphere(1.0);
  const Vec3 on = Vec3(0.3, -0.4, 0.5).normalized();
  EXPECT_LT((s.retract(on) - on).norm(), 1e-15);
  const Manifold t = Manifold::torus(1.0, 1.0 / 3.0);
  EXPECT_LT(std::abs(torus_residual(t.retract(Vec3(1, 0, 0.4)), 1.0, 1.0 / 3.0)), 1e-12);
  const Manifold ls = unit_level_sphere();
  EXPECT_LT((ls.retract(Vec3(0, 0, 1.1)) - Vec3(0, 0, 1)).norm(), 1e-12);
}

TEST(Geometry, RetractOutsideTube) {
  const Manifold s = Manifold::sphere(1.0);
  try {
    s.retract(Vec3(0, 0, 2.5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutsideTube);
  }
}

TEST(Geometry, DefaultTubeIsNinetyPercentOfReach) {
  EXPECT_DOUBLE_EQ(Manifold::sphere(2.0).tube().delta, 1.8);
  EXPECT_DOUBLE_EQ(Manifold::torus(1.0, 1.0 / 3.0).tube().delta, 0.3);
}

TEST(Geometry, RetractionIdentityOnManifold) {
  for (const Manifold& m : {Manifold::sphere(1.0), Manifold::torus()}) {
    for (const Vec3& x : sample_uniform(m, 500, 3)) EXPECT_LT((m.retract(x) - x).norm(), 1e-14);
  }
}

TEST(Geometry, NearClosestPointRatio) {
  // Analytic retractions give ratio 1; the level-set Newton retraction must
  // stay within [1, 2].
  const Manifold t = Manifold::torus();
  const Manifold ls = unit_level_sphere();
  const Manifold s = Manifold::sphere(1.0);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> off(-0.25, 0.25);
  for (const Vec3& x : sample_uniform(t, 1000, 5)) {
    const Vec3 y = x + off(rng) * t.normal(x);
    if ((y - x).norm() < 1e-6) continue;
    const double ratio = (y - t.retract(y)).norm() / (y - t.closest_point(y)).norm();
    EXPECT_NEAR(ratio, 1.0, 1e-12);
  }
  std::uniform_real_distribution<double> gen(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 x = Vec3(gen(rng), gen(rng), gen(rng)).normalized();
    const Vec3 y = x * (1.0 + 0.4 * off(rng)) + 0.05 * Vec3(gen(rng), gen(rng), gen(rng));
    const double d = (y - s.closest_point(y)).norm();
    if (d < 1e-6) continue;
    const Vec3 r = ls.retract(y);
    EXPECT_LT(std::abs(r.squaredNorm() - 1.0), 1e-12);
    const double ratio = (y - r).norm() / d;
    EXPECT_GE(ratio, 1.0 - 1e-9);
    EXPECT_LE(ratio, 2.0);
  }
}

TEST(Geometry, TorusNormalIsOutward) {
  const Manifold t = Manifold::torus();
  EXPECT_LT((t.normal(Vec3(4.0 / 3.0, 0, 0)) - Vec3(1, 0, 0)).norm(), 1e-14);
  EXPECT_LT((t.normal(Vec3(1, 0, 1.0 / 3.0)) - Vec3(0, 0, 1)).norm(), 1e-14);
}

#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "surfsl/pointcloud.hpp"

namespace surfsl {

struct FixedRadius {
  double r = 0.0;
};
/// r = theta * h_X / epsilon (needs the cloud's fill distance).
struct EpsilonScaledRadius {
  double theta = 1.0;
  double epsilon = 1.0;
};
/// Smallest global radius such that the ball around every node holds at
/// least factor * M points.
struct MinPointsRadius {
  double factor = 2.0;
};
using RadiusRule = std::variant<FixedRadius, EpsilonScaledRadius, MinPointsRadius>;

enum class RemapOperator { L1, MLS };
enum class MlsWeight { WendlandC2, Bump };

struct RemapConfig {
  int degree = 2;
  RadiusRule radius = MinPointsRadius{2.0};
  RemapOperator op = RemapOperator::L1;
  MlsWeight weight = MlsWeight::WendlandC2;
};

/// Dimension of the ambient polynomial space P_k(R^3): (k+3 choose 3).
std::size_t poly_dim(int degree);

/// Monomial exponents in graded-lexicographic order.
std::vector<std::array<int, 3>> monomial_exponents(int degree);

/// Vandermonde matrix in shifted/scaled coordinates u = (x - z)/r, plus the
/// basis evaluated at z (the first unit vector).
struct LocalBasis {
  Eigen::MatrixXd V;
  Eigen::VectorXd p;
};
LocalBasis poly_basis(const Vec3& z, double r, std::span<const Vec3> pts, int degree);

/// Remapping weights a(x_j, z) for one evaluation point; zero off `support`.
struct WeightSet {
  Vec3 eval_point = Vec3::Zero();
  double radius = 0.0;
  std::vector<std::size_t> support;
  std::vector<double> weights;

  double l1_norm() const;
};

double apply(const WeightSet& w, std::span<const double> values);

/// MLS weight function of s = |x - z| / r, zero for s >= 1.
double mls_weight(MlsWeight kind, double s);

/// Resolves the radius rule against a cloud once and computes weight sets.
class Remapper {
 public:
  Remapper(const PointCloud& cloud, RemapConfig cfg);

  const RemapConfig& config() const { return cfg_; }
  const PointCloud& cloud() const { return *cloud_; }
  double radius() const { return radius_; }

  /// Dispatches on cfg.op. On NoPolynomialReproduction / RankDeficient the
  /// ball is grown by 1.5x up to three times before the error is rethrown.
  WeightSet weights(const Vec3& z) const;
  WeightSet l1_weights(const Vec3& z) const;
  WeightSet mls_weights(const Vec3& z) const;

  /// Calls body(i, weights of points[i]) once per point. Points are visited
  /// in a spatially coherent order, in fixed blocks that each run on one
  /// worker; within a block every L1 solve starts from the previous optimal
  /// basis. The block layout does not depend on the worker count.
  void for_each_weights(std::span<const Vec3> points,
                        const std::function<void(std::size_t, const WeightSet&)>& body,
                        bool parallel = false) const;

 private:
  template <class F>
  WeightSet with_retries(const Vec3& z, F&& compute) const;
  WeightSet l1_weights(const Vec3& z, std::vector<std::size_t>* basis) const;
  WeightSet l1_at(const Vec3& z, double r, std::vector<std::size_t>* basis) const;
  WeightSet mls_at(const Vec3& z, double r) const;

  const PointCloud* cloud_;
  RemapConfig cfg_;
  double radius_ = 0.0;
};

double resolve_radius(const PointCloud& cloud, const RemapConfig& cfg);

WeightSet l1_weights(const PointCloud& cloud, const Vec3& z, const RemapConfig& cfg);
WeightSet mls_weights(const PointCloud& cloud, const Vec3& z, const RemapConfig& cfg);

/// max over dense points of sum_j |a(x_j, z)|. Requires dense >= 20x cloud.
double lebesgue_constant(const PointCloud& cloud, const RemapConfig& cfg, const PointCloud& dense,
                         bool parallel = false);
/// Same, over an arbitrary list of evaluation points.
double lebesgue_constant(const Remapper& remap, std::span<const Vec3> eval_points, bool parallel = false);

}  // namespace surfsl

#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "surfsl/geometry.hpp"

namespace surfsl {

/// Explicit Runge-Kutta coefficients: nodes alpha, strictly lower-triangular
/// beta, weights gamma.
struct ButcherTableau {
  std::string name;
  int order = 0;
  Eigen::VectorXd alpha;
  Eigen::MatrixXd beta;
  Eigen::VectorXd gamma;

  int stages() const { return static_cast<int>(gamma.size()); }

  /// Validates shapes, explicitness, row sums, and the classical order
  /// conditions up to min(order, 4). Throws InvalidArgument.
  static ButcherTableau make(std::string name, int order, Eigen::VectorXd alpha, Eigen::MatrixXd beta,
                             Eigen::VectorXd gamma);
};

/// "euler", "heun", "kutta3", "rk4", "rk5", "rk6" (also "rk1" .. "rk3").
ButcherTableau tableau_by_name(const std::string& name);
/// Shipped tableau of the given order, 1..6.
ButcherTableau tableau_for_order(int order);

/// Tangential velocity a(x, t) given on the manifold.
struct VectorField {
  std::function<Vec3(const Vec3& x, double t)> eval;
  bool autonomous = false;

  Vec3 operator()(const Vec3& x, double t) const { return eval(x, t); }
  static VectorField zero();
};

using ScalarField = std::function<double(const Vec3& x, double t)>;

/// Right-hand side g(s, y) of an ODE on the manifold, evaluated through the
/// extension G(s, y) = g(s, retract(y)).
using OdeRhs = std::function<Vec3(double s, const Vec3& y)>;

/// eta_hat = x + h sum gamma_b k_b. Throws TubeExceeded when a stage argument
/// or eta_hat leaves the tube.
Vec3 rk_ambient_step(const ButcherTableau& tab, const Manifold& m, const OdeRhs& g, double s, const Vec3& x,
                     double h);

/// retract(rk_ambient_step(...)).
Vec3 projected_rk_step(const ButcherTableau& tab, const Manifold& m, const OdeRhs& g, double s, const Vec3& x,
                       double h);

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int exactness = 0;
};

/// Gauss-Legendre rule on [0, 1], 1 <= n <= 8.
GaussRule gauss_rule(int n);
/// Point count ceil((order + 1) / 2), exact for degree >= order.
GaussRule gauss_rule_for_order(int order);

/// States along a backward characteristic y' = a(y, t0 - s), y(0) = x0.
struct Trajectory {
  Vec3 x0 = Vec3::Zero();
  double t0 = 0.0;
  std::vector<double> s;
  std::vector<Vec3> y;

  /// y at a stored target (matched to within a relative 1e-12).
  const Vec3& at(double target) const;
  const Vec3& departure() const { return y.back(); }
};

/// Integrates from s = 0 through the ascending targets in [0, h], one
/// projected step per gap. On TubeExceeded the gap is split in two, up to five
/// times, before the error is rethrown.
Trajectory characteristic_trace(const ButcherTableau& tab, const Manifold& m, const VectorField& a,
                                const Vec3& x0, double t0, std::span<const double> targets);

/// Sorted, de-duplicated trace targets needed by mu_quad/nu_quad plus h itself.
std::vector<double> quadrature_targets(const GaussRule& rule, double h, bool nested);

/// Q1 = exp(h sum_k w_k b(y(t_k h), t0 - t_k h)).
double mu_quad(const ScalarField& b, const Trajectory& traj, double h, const GaussRule& rule);

/// Q2 = h sum_k w_k mu_hat(t_k h) c(y(t_k h), t0 - t_k h), mu_hat from the same
/// rule nested on [0, t_k h].
double nu_quad(const ScalarField& b, const ScalarField& c, const Trajectory& traj, double h,
               const GaussRule& rule);

}  // namespace surfsl

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "surfsl/ode.hpp"
#include "surfsl/pointcloud.hpp"
#include "surfsl/remap.hpp"

namespace surfsl {

/// v_t = a . grad v + b v + c on a closed surface, v(., 0) = v0.
/// Empty b or c means identically zero.
struct SLProblem {
  std::string name;
  Manifold manifold;
  VectorField velocity;
  ScalarField b;
  ScalarField c;
  ScalarField v0;
  /// Exact solution v(x, t); with exact_only_at_final it is valid only at t_final.
  ScalarField exact;
  bool exact_only_at_final = false;
  double t_final = 1.0;
};

/// h_t = c0 sqrt(h_X).
struct SqrtCoupling {
  double c0 = 0.5;
};
/// h_t = c_cfl h_X / u_max.
struct CflRule {
  double c_cfl = 4.0;
  double u_max = 1.0;
};
/// h_t = c0 h_X^(1/sigma).
struct PowerRule {
  double sigma = 2.0;
  double c0 = 0.5;
};
using TimestepRule = std::variant<SqrtCoupling, CflRule, PowerRule>;

double resolve_timestep(const TimestepRule& rule, double h_x);

struct SLConfig {
  std::size_t n_nodes = 1000;
  int rk_order = 4;
  RemapConfig remap;
  TimestepRule timestep = SqrtCoupling{};
  std::uint64_t seed = 1;
  bool parallel = false;
};

struct StepDiagnostics {
  double max_departure = 0.0;
  /// Relative max error against problem.exact, when provided.
  std::optional<double> rel_error;
};

struct SLRun {
  /// values(n, m) ~ v(x_n, t_m).
  Eigen::MatrixXd values;
  std::vector<double> times;
  std::vector<StepDiagnostics> steps;
  double h_x = 0.0;
  double h_t = 0.0;
  double radius = 0.0;
  SLConfig config;

  Eigen::VectorXd final_values() const { return values.col(values.cols() - 1); }
};

struct DepartureResult {
  std::vector<Vec3> xi;
  std::vector<Trajectory> trajectories;
};

bool is_zero_coefficient(const ScalarField& f);

/// Backward characteristics from every node at time t_m over h_t.
DepartureResult departure_points(const SLProblem& problem, const PointCloud& cloud, double t_m, double h_t,
                                 const ButcherTableau& tab, bool parallel = false);

/// Runs the fully discrete scheme on a given cloud.
class SLSolver {
 public:
  SLSolver(const SLProblem& problem, const PointCloud& cloud, SLConfig cfg);

  /// Next column from `prev`, advancing t_m - h_t -> t_m.
  Eigen::VectorXd step(const Eigen::VectorXd& prev, double t_m, double h_t, StepDiagnostics* diag = nullptr);

  SLRun solve();

  double h_x() const { return h_x_; }
  double h_t() const { return h_t_; }
  const Remapper& remapper() const { return remap_; }

 private:
  const SLProblem& problem_;
  const PointCloud& cloud_;
  SLConfig cfg_;
  ButcherTableau tab_;
  GaussRule rule_;
  Remapper remap_;
  double h_x_ = 0.0;
  double h_t_ = 0.0;
  // Weights reused across steps for autonomous fields at a fixed h_t.
  std::vector<WeightSet> cached_;
  double cached_h_ = -1.0;
};

/// Column m from column m - 1.
Eigen::VectorXd sl_step(const Eigen::VectorXd& prev, const SLProblem& problem, const PointCloud& cloud,
                        const SLConfig& cfg, double t_m, double h_t);

/// Generates the nodes per cfg, measures h_X, and integrates to t_final.
SLRun sl_solve(const SLProblem& problem, const SLConfig& cfg);
/// Integrates on a given cloud (whose fill distance must be known).
SLRun sl_solve(const SLProblem& problem, const PointCloud& cloud, const SLConfig& cfg);

/// ||computed - exact||_inf / ||exact||_inf. Throws DivisionByZero when exact vanishes.
double relative_max_error(std::span<const double> computed, std::span<const double> exact);
double relative_max_error(const SLRun& run, const PointCloud& cloud, const ScalarField& exact,
                          std::size_t column);

/// Samples a field at the cloud nodes at time t.
Eigen::VectorXd sample(const ScalarField& f, const PointCloud& cloud, double t);

// Problem library.

/// The displayed (p, q) knot-following field on the torus with outer radius 1.
VectorField torus_knot_field(int p, int q, double R);
/// The displayed deformational flow field on the unit sphere with period T.
VectorField deformational_flow_field(double T);
/// Solid-body rotation omega x x.
VectorField solid_body_field(const Vec3& omega);

/// amplitude * sum_i exp(-sharpness |x - c_i|^2).
ScalarField gaussian_bells(std::vector<Vec3> centers, double sharpness, double amplitude = 1.0);
ScalarField torus_bells(double R);
ScalarField sphere_bells();

/// Max |a| over a latitude/longitude/time grid of the deformational field.
double estimate_deformational_umax(double T, int n_lambda = 181, int n_theta = 91, int n_time = 51);

/// Bells advected along the knot; exact solution after a full period 2 pi.
SLProblem torus_knot_problem(int p = 3, int q = 2, double R = 1.0 / 3.0);
/// Deformational flow on the unit sphere; returns to v0 at t = T.
SLProblem deformational_problem(double T = 5.0);
/// Solid-body rotation about z with b(x, t) = beta x_3 and c(x, t) = gamma
/// sin(t) on the unit sphere; the exact solution is known in closed form.
SLProblem manufactured_problem(double omega = 1.0, double beta = 0.5, double gamma = 0.3, double T = 1.0);

}  // namespace surfsl

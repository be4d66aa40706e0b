#include "surfsl/sl.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "surfsl/errors.hpp"
#include "surfsl/parallel.hpp"

namespace surfsl {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::vector<double> step_times(double t_final, double h) {
  const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(t_final / h - 1e-9)));
  std::vector<double> t(n + 1);
  for (std::size_t m = 0; m < n; ++m) t[m] = static_cast<double>(m) * h;
  t[n] = t_final;
  return t;
}

}  // namespace

double resolve_timestep(const TimestepRule& rule, double h_x) {
  if (!(h_x > 0.0)) fail(ErrorCode::InvalidArgument, "fill distance must be positive");
  return std::visit(overloaded{
                        [&](const SqrtCoupling& r) {
                          if (!(r.c0 > 0.0)) fail(ErrorCode::InvalidArgument, "sqrt_coupling c0 must be positive");
                          return r.c0 * std::sqrt(h_x);
                        },
                        [&](const CflRule& r) {
                          if (!(r.c_cfl > 0.0) || !(r.u_max > 0.0)) {
                            fail(ErrorCode::InvalidArgument, "cfl rule needs c_cfl, u_max > 0");
                          }
                          return r.c_cfl * h_x / r.u_max;
                        },
                        [&](const PowerRule& r) {
                          if (!(r.sigma > 0.0) || !(r.c0 > 0.0)) {
                            fail(ErrorCode::InvalidArgument, "power rule needs sigma, c0 > 0");
                          }
                          return r.c0 * std::pow(h_x, 1.0 / r.sigma);
                        },
                    },
                    rule);
}

bool is_zero_coefficient(const ScalarField& f) { return !static_cast<bool>(f); }

Eigen::VectorXd sample(const ScalarField& f, const PointCloud& cloud, double t) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(cloud.size()));
  for (std::size_t i = 0; i < cloud.size(); ++i) out(static_cast<Eigen::Index>(i)) = f(cloud[i], t);
  return out;
}

DepartureResult departure_points(const SLProblem& problem, const PointCloud& cloud, double t_m, double h_t,
                                 const ButcherTableau& tab, bool parallel) {
  const bool pure = is_zero_coefficient(problem.b) && is_zero_coefficient(problem.c);
  const GaussRule rule = gauss_rule_for_order(tab.order);
  const std::vector<double> targets =
      pure ? std::vector<double>{h_t} : quadrature_targets(rule, h_t, !is_zero_coefficient(problem.c));
  DepartureResult out;
  out.xi.resize(cloud.size());
  out.trajectories.resize(cloud.size());
  parallel_for(
      cloud.size(),
      [&](std::size_t n) {
        out.trajectories[n] =
            characteristic_trace(tab, problem.manifold, problem.velocity, cloud[n], t_m, targets);
        out.xi[n] = out.trajectories[n].departure();
      },
      parallel);
  return out;
}

SLSolver::SLSolver(const SLProblem& problem, const PointCloud& cloud, SLConfig cfg)
    : problem_(problem),
      cloud_(cloud),
      cfg_(std::move(cfg)),
      tab_(tableau_for_order(cfg_.rk_order)),
      rule_(gauss_rule_for_order(cfg_.rk_order)),
      remap_(cloud, cfg_.remap) {
  if (!problem_.velocity.eval) fail(ErrorCode::InvalidArgument, "problem has no velocity field");
  if (!problem_.v0) fail(ErrorCode::InvalidArgument, "problem has no initial condition");
  if (!(problem_.t_final > 0.0)) fail(ErrorCode::InvalidArgument, "final time must be positive");
  const auto h = cloud.fill_distance();
  if (!h) fail(ErrorCode::InvalidArgument, "cloud fill distance unknown");
  h_x_ = *h;
  h_t_ = std::min(resolve_timestep(cfg_.timestep, h_x_), problem_.t_final);
}

Eigen::VectorXd SLSolver::step(const Eigen::VectorXd& prev, double t_m, double h_t, StepDiagnostics* diag) {
  const std::size_t n_nodes = cloud_.size();
  if (static_cast<std::size_t>(prev.size()) != n_nodes) fail(ErrorCode::InvalidArgument, "value column size mismatch");
  const bool zero_b = is_zero_coefficient(problem_.b);
  const bool zero_c = is_zero_coefficient(problem_.c);
  const bool pure = zero_b && zero_c;
  const bool reuse = problem_.velocity.autonomous && cached_h_ == h_t && cached_.size() == n_nodes;
  const bool keep = problem_.velocity.autonomous && !reuse;
  const std::vector<double> targets = pure ? std::vector<double>{h_t} : quadrature_targets(rule_, h_t, !zero_c);

  if (keep) cached_.assign(n_nodes, WeightSet{});
  Eigen::VectorXd next(prev.size());
  std::vector<double> dep(n_nodes, 0.0);
  std::vector<WeightSet> local;
  if (!reuse && !keep) local.resize(n_nodes);
  std::vector<WeightSet>& weights = (reuse || keep) ? cached_ : local;
  const std::span<const double> values(prev.data(), static_cast<std::size_t>(prev.size()));

  std::vector<double> q1(n_nodes, 1.0), q2(n_nodes, 0.0);
  std::vector<Vec3> xi(n_nodes);
  if (!reuse || !pure) {
    parallel_for(
        n_nodes,
        [&](std::size_t n) {
          const Trajectory traj =
              characteristic_trace(tab_, problem_.manifold, problem_.velocity, cloud_[n], t_m, targets);
          if (!zero_b) q1[n] = mu_quad(problem_.b, traj, h_t, rule_);
          if (!zero_c) {
            const ScalarField zero = [](const Vec3&, double) { return 0.0; };
            q2[n] = nu_quad(zero_b ? zero : problem_.b, problem_.c, traj, h_t, rule_);
          }
          xi[n] = traj.departure();
        },
        cfg_.parallel);
  }
  if (!reuse) {
    remap_.for_each_weights(
        xi, [&](std::size_t n, const WeightSet& w) { weights[n] = w; }, cfg_.parallel);
  }
  parallel_for(
      n_nodes,
      [&](std::size_t n) {
        dep[n] = (weights[n].eval_point - cloud_[n]).norm();
        next(static_cast<Eigen::Index>(n)) = q1[n] * surfsl::apply(weights[n], values) + q2[n];
      },
      cfg_.parallel);

  if (keep) cached_h_ = h_t;
  if (diag) {
    diag->max_departure = dep.empty() ? 0.0 : *std::max_element(dep.begin(), dep.end());
    diag->rel_error.reset();
  }
  return next;
}

SLRun SLSolver::solve() {
  SLRun run;
  run.config = cfg_;
  run.h_x = h_x_;
  run.h_t = h_t_;
  run.radius = remap_.radius();
  run.times = step_times(problem_.t_final, h_t_);
  const std::size_t n_steps = run.times.size() - 1;
  run.values.resize(static_cast<Eigen::Index>(cloud_.size()), static_cast<Eigen::Index>(n_steps + 1));
  run.values.col(0) = sample(problem_.v0, cloud_, 0.0);
  run.steps.assign(n_steps + 1, StepDiagnostics{});
  if (problem_.exact && !problem_.exact_only_at_final) {
    run.steps[0].rel_error = relative_max_error(run, cloud_, problem_.exact, 0);
  }
  for (std::size_t m = 1; m <= n_steps; ++m) {
    const double t = run.times[m];
    const double h = t - run.times[m - 1];
    try {
      run.values.col(static_cast<Eigen::Index>(m)) =
          step(run.values.col(static_cast<Eigen::Index>(m - 1)), t, h, &run.steps[m]);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "step " << m << " (t = " << t << "): " << e.what();
      throw Error(e.code(), os.str());
    }
    if (problem_.exact && (!problem_.exact_only_at_final || m == n_steps)) {
      run.steps[m].rel_error = relative_max_error(run, cloud_, problem_.exact, m);
    }
  }
  return run;
}

Eigen::VectorXd sl_step(const Eigen::VectorXd& prev, const SLProblem& problem, const PointCloud& cloud,
                        const SLConfig& cfg, double t_m, double h_t) {
  SLSolver solver(problem, cloud, cfg);
  return solver.step(prev, t_m, h_t);
}

SLRun sl_solve(const SLProblem& problem, const PointCloud& cloud, const SLConfig& cfg) {
  SLSolver solver(problem, cloud, cfg);
  return solver.solve();
}

SLRun sl_solve(const SLProblem& problem, const SLConfig& cfg) {
  const PointCloud cloud = generate_nodes(problem.manifold, cfg.n_nodes, cfg.seed);
  return sl_solve(problem, cloud, cfg);
}

double relative_max_error(std::span<const double> computed, std::span<const double> exact) {
  if (computed.size() != exact.size()) fail(ErrorCode::InvalidArgument, "size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    num = std::max(num, std::abs(computed[i] - exact[i]));
    den = std::max(den, std::abs(exact[i]));
  }
  if (den == 0.0) {
    std::ostringstream os;
    os << "exact solution vanishes identically; absolute max error " << num;
    fail(ErrorCode::DivisionByZero, os.str());
  }
  return num / den;
}

double relative_max_error(const SLRun& run, const PointCloud& cloud, const ScalarField& exact,
                          std::size_t column) {
  const Eigen::VectorXd ex = sample(exact, cloud, run.times.at(column));
  const Eigen::VectorXd v = run.values.col(static_cast<Eigen::Index>(column));
  return relative_max_error(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())),
                            std::span<const double>(ex.data(), static_cast<std::size_t>(ex.size())));
}

}  // namespace surfsl

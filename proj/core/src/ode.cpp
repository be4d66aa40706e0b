#include "surfsl/ode.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "surfsl/errors.hpp"

namespace surfsl {
namespace {

constexpr double kOrderTol = 1e-12;
constexpr int kMaxHalvings = 5;

Eigen::MatrixXd lower(std::initializer_list<std::initializer_list<double>> rows, int m) {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m, m);
  int i = 1;
  for (const auto& row : rows) {
    int j = 0;
    for (double v : row) b(i, j++) = v;
    ++i;
  }
  return b;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

void check_condition(const std::string& name, const char* what, double lhs, double rhs) {
  if (std::abs(lhs - rhs) > kOrderTol) {
    std::ostringstream os;
    os << "tableau " << name << " violates order condition " << what << ": " << lhs << " != " << rhs;
    fail(ErrorCode::InvalidArgument, os.str());
  }
}

double legendre(int n, double x, double* deriv) {
  double p0 = 1.0, p1 = x;
  if (n == 0) {
    *deriv = 0.0;
    return 1.0;
  }
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  *deriv = n * (x * p1 - p0) / (x * x - 1.0);
  return p1;
}

}  // namespace

ButcherTableau ButcherTableau::make(std::string name, int order, Eigen::VectorXd alpha, Eigen::MatrixXd beta,
                                    Eigen::VectorXd gamma) {
  const Eigen::Index m = gamma.size();
  if (m < 1 || alpha.size() != m || beta.rows() != m || beta.cols() != m) {
    fail(ErrorCode::InvalidArgument, "tableau " + name + " has inconsistent shapes");
  }
  if (order < 1) fail(ErrorCode::InvalidArgument, "tableau order must be positive");
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) {
      if (beta(i, j) != 0.0) fail(ErrorCode::InvalidArgument, "tableau " + name + " is not explicit");
    }
    check_condition(name, "row sum", beta.row(i).sum(), alpha(i));
  }
  const Eigen::VectorXd& b = gamma;
  const Eigen::VectorXd& c = alpha;
  const Eigen::MatrixXd& A = beta;
  check_condition(name, "sum b = 1", b.sum(), 1.0);
  if (order >= 2) check_condition(name, "sum bc = 1/2", b.dot(c), 0.5);
  if (order >= 3) {
    check_condition(name, "sum bc^2 = 1/3", b.dot(c.cwiseProduct(c)), 1.0 / 3.0);
    check_condition(name, "sum bAc = 1/6", b.dot(A * c), 1.0 / 6.0);
  }
  if (order >= 4) {
    const Eigen::VectorXd c2 = c.cwiseProduct(c);
    check_condition(name, "sum bc^3 = 1/4", b.dot(c2.cwiseProduct(c)), 0.25);
    check_condition(name, "sum bcAc = 1/8", b.cwiseProduct(c).dot(A * c), 0.125);
    check_condition(name, "sum bAc^2 = 1/12", b.dot(A * c2), 1.0 / 12.0);
    check_condition(name, "sum bAAc = 1/24", b.dot(A * (A * c)), 1.0 / 24.0);
  }
  return ButcherTableau{std::move(name), order, std::move(alpha), std::move(beta), std::move(gamma)};
}

ButcherTableau tableau_by_name(const std::string& name) {
  if (name == "euler" || name == "rk1") {
    return ButcherTableau::make("euler", 1, vec({0.0}), Eigen::MatrixXd::Zero(1, 1), vec({1.0}));
  }
  if (name == "heun" || name == "rk2") {
    return ButcherTableau::make("heun", 2, vec({0.0, 1.0}), lower({{1.0}}, 2), vec({0.5, 0.5}));
  }
  if (name == "kutta3" || name == "rk3") {
    return ButcherTableau::make("kutta3", 3, vec({0.0, 0.5, 1.0}), lower({{0.5}, {-1.0, 2.0}}, 3),
                                vec({1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0}));
  }
  if (name == "rk4") {
    return ButcherTableau::make("rk4", 4, vec({0.0, 0.5, 0.5, 1.0}), lower({{0.5}, {0.0, 0.5}, {0.0, 0.0, 1.0}}, 4),
                                vec({1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0}));
  }
  if (name == "rk5") {
    // Butcher's six-stage fifth-order method.
    return ButcherTableau::make(
        "rk5", 5, vec({0.0, 0.25, 0.25, 0.5, 0.75, 1.0}),
        lower({{0.25},
               {0.125, 0.125},
               {0.0, -0.5, 1.0},
               {3.0 / 16.0, 0.0, 0.0, 9.0 / 16.0},
               {-3.0 / 7.0, 2.0 / 7.0, 12.0 / 7.0, -12.0 / 7.0, 8.0 / 7.0}},
              6),
        vec({7.0 / 90.0, 0.0, 32.0 / 90.0, 12.0 / 90.0, 32.0 / 90.0, 7.0 / 90.0}));
  }
  if (name == "rk6") {
    // Butcher's seven-stage sixth-order method.
    return ButcherTableau::make(
        "rk6", 6, vec({0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0, 0.5, 0.5, 1.0}),
        lower({{1.0 / 3.0},
               {0.0, 2.0 / 3.0},
               {1.0 / 12.0, 1.0 / 3.0, -1.0 / 12.0},
               {-1.0 / 16.0, 9.0 / 8.0, -3.0 / 16.0, -3.0 / 8.0},
               {0.0, 9.0 / 8.0, -3.0 / 8.0, -3.0 / 4.0, 0.5},
               {9.0 / 44.0, -9.0 / 11.0, 63.0 / 44.0, 18.0 / 11.0, 0.0, -16.0 / 11.0}},
              7),
        vec({11.0 / 120.0, 0.0, 27.0 / 40.0, 27.0 / 40.0, -4.0 / 15.0, -4.0 / 15.0, 11.0 / 120.0}));
  }
  fail(ErrorCode::InvalidArgument, "unknown Runge-Kutta tableau '" + name + "'");
}

ButcherTableau tableau_for_order(int order) {
  static const char* names[] = {"euler", "heun", "kutta3", "rk4", "rk5", "rk6"};
  if (order < 1 || order > 6) fail(ErrorCode::InvalidArgument, "Runge-Kutta order must lie in [1, 6]");
  return tableau_by_name(names[order - 1]);
}

VectorField VectorField::zero() {
  return VectorField{[](const Vec3&, double) { return Vec3::Zero(); }, true};
}

Vec3 rk_ambient_step(const ButcherTableau& tab, const Manifold& m, const OdeRhs& g, double s, const Vec3& x,
                     double h) {
  const int ns = tab.stages();
  std::vector<Vec3> k(static_cast<std::size_t>(ns));
  for (int j = 0; j < ns; ++j) {
    Vec3 arg = x;
    for (int b = 0; b < j; ++b) {
      if (tab.beta(j, b) != 0.0) arg += h * tab.beta(j, b) * k[static_cast<std::size_t>(b)];
    }
    if (!m.in_tube(arg)) fail(ErrorCode::TubeExceeded, "Runge-Kutta stage left the tube");
    const Vec3 on = j == 0 && arg == x ? x : m.closest_point(arg);
    k[static_cast<std::size_t>(j)] = g(s + tab.alpha(j) * h, on);
  }
  Vec3 out = x;
  for (int b = 0; b < ns; ++b) {
    if (tab.gamma(b) != 0.0) out += h * tab.gamma(b) * k[static_cast<std::size_t>(b)];
  }
  if (!m.in_tube(out)) fail(ErrorCode::TubeExceeded, "Runge-Kutta update left the tube");
  return out;
}

Vec3 projected_rk_step(const ButcherTableau& tab, const Manifold& m, const OdeRhs& g, double s, const Vec3& x,
                       double h) {
  return m.retract(rk_ambient_step(tab, m, g, s, x, h));
}

GaussRule gauss_rule(int n) {
  if (n < 1 || n > 8) fail(ErrorCode::InvalidArgument, "Gauss rule needs 1 to 8 points");
  GaussRule rule;
  rule.exactness = 2 * n - 1;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    // Newton on P_n from the Chebyshev-like initial guess; roots come out descending.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double d = 0.0;
    for (int it = 0; it < 100; ++it) {
      const double p = legendre(n, x, &d);
      const double dx = p / d;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    legendre(n, x, &d);
    const double w = 2.0 / ((1.0 - x * x) * d * d);
    const auto idx = static_cast<std::size_t>(n - 1 - i);
    rule.nodes[idx] = 0.5 * (1.0 + x);
    rule.weights[idx] = 0.5 * w;
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.5;
  return rule;
}

GaussRule gauss_rule_for_order(int order) {
  if (order < 1) fail(ErrorCode::InvalidArgument, "order must be positive");
  return gauss_rule((order + 2) / 2);
}

const Vec3& Trajectory::at(double target) const {
  const double tol = 1e-12 * std::max(1.0, s.empty() ? 1.0 : std::abs(s.back()));
  auto it = std::lower_bound(s.begin(), s.end(), target - tol);
  if (it == s.end() || std::abs(*it - target) > tol) {
    fail(ErrorCode::InvalidArgument, "trajectory was not sampled at the requested time");
  }
  return y[static_cast<std::size_t>(it - s.begin())];
}

Trajectory characteristic_trace(const ButcherTableau& tab, const Manifold& m, const VectorField& a,
                                const Vec3& x0, double t0, std::span<const double> targets) {
  Trajectory traj;
  traj.x0 = x0;
  traj.t0 = t0;
  traj.s.reserve(targets.size());
  traj.y.reserve(targets.size());
  const OdeRhs g = [&a, t0](double s, const Vec3& y) { return a(y, t0 - s); };
  double s = 0.0;
  Vec3 y = x0;
  for (double target : targets) {
    if (!(target >= s)) fail(ErrorCode::InvalidArgument, "trace targets must be ascending and nonnegative");
    const double gap = target - s;
    if (gap > 0.0) {
      for (int halvings = 0;; ++halvings) {
        try {
          const int pieces = 1 << halvings;
          const double dh = gap / pieces;
          Vec3 cur = y;
          for (int p = 0; p < pieces; ++p) cur = projected_rk_step(tab, m, g, s + p * dh, cur, dh);
          y = cur;
          break;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::TubeExceeded || halvings == kMaxHalvings) throw;
        }
      }
    }
    s = target;
    traj.s.push_back(target);
    traj.y.push_back(y);
  }
  return traj;
}

std::vector<double> quadrature_targets(const GaussRule& rule, double h, bool nested) {
  std::vector<double> out;
  for (double tk : rule.nodes) {
    out.push_back(tk * h);
    if (nested) {
      for (double tj : rule.nodes) out.push_back(tk * h * tj);
    }
  }
  out.push_back(h);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double mu_quad(const ScalarField& b, const Trajectory& traj, double h, const GaussRule& rule) {
  double sum = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const double tau = rule.nodes[k] * h;
    sum += rule.weights[k] * b(traj.at(tau), traj.t0 - tau);
  }
  return std::exp(h * sum);
}

double nu_quad(const ScalarField& b, const ScalarField& c, const Trajectory& traj, double h,
               const GaussRule& rule) {
  double sum = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const double tau = rule.nodes[k] * h;
    double inner = 0.0;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const double sj = tau * rule.nodes[j];
      inner += rule.weights[j] * b(traj.at(sj), traj.t0 - sj);
    }
    sum += rule.weights[k] * std::exp(tau * inner) * c(traj.at(tau), traj.t0 - tau);
  }
  return h * sum;
}

}  // namespace surfsl

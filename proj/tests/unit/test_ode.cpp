#include <cmath>

#include <gtest/gtest.h>

#include "surfsl/errors.hpp"
#include "surfsl/experiment.hpp"
#include "surfsl/ode.hpp"
#include "surfsl/pointcloud.hpp"

using namespace surfsl;

namespace {

const Vec3 kAxis = Vec3(1.0, 2.0, 3.0).normalized();

Vec3 rotate(const Vec3& x, double angle) { return Eigen::AngleAxisd(angle, kAxis) * x; }

OdeRhs solid_body() {
  return [](double, const Vec3& y) { return Vec3(kAxis.cross(y)); };
}

double global_error(const ButcherTableau& tab, int steps, double T = 1.0) {
  const Manifold s = Manifold::sphere(1.0);
  const Vec3 x0 = Vec3(0.6, -0.48, 0.64);
  const double h = T / steps;
  Vec3 y = x0;
  for (int i = 0; i < steps; ++i) y = projected_rk_step(tab, s, solid_body(), i * h, y, h);
  return (y - rotate(x0, T)).norm();
}

}  // namespace

TEST(Ode, GaussRuleExamples) {
  const GaussRule g1 = gauss_rule(1);
  EXPECT_EQ(g1.nodes.size(), 1u);
  EXPECT_DOUBLE_EQ(g1.nodes[0], 0.5);
  EXPECT_DOUBLE_EQ(g1.weights[0], 1.0);
  const GaussRule g2 = gauss_rule(2);
  EXPECT_NEAR(g2.nodes[0], (3.0 - std::sqrt(3.0)) / 6.0, 1e-15);
  EXPECT_NEAR(g2.nodes[1], (3.0 + std::sqrt(3.0)) / 6.0, 1e-15);
  EXPECT_NEAR(g2.weights[0], 0.5, 1e-15);
  double t3 = 0.0;
  for (int k = 0; k < 2; ++k) t3 += g2.weights[k] * std::pow(g2.nodes[k], 3);
  EXPECT_NEAR(t3, 0.25, 1e-15);
}

TEST(Ode, GaussRuleExactness) {
  for (int n = 1; n <= 8; ++n) {
    const GaussRule g = gauss_rule(n);
    EXPECT_EQ(g.exactness, 2 * n - 1);
    for (int p = 0; p <= g.exactness; ++p) {
      double s = 0.0;
      for (std::size_t k = 0; k < g.nodes.size(); ++k) s += g.weights[k] * std::pow(g.nodes[k], p);
      EXPECT_NEAR(s, 1.0 / (p + 1), 1e-14) << "n " << n << " p " << p;
    }
  }
  EXPECT_THROW(gauss_rule(0), Error);
  EXPECT_THROW(gauss_rule(9), Error);
  for (int order = 1; order <= 6; ++order) EXPECT_GE(gauss_rule_for_order(order).exactness, order);
}

TEST(Ode, TableauValidation) {
  for (int order = 1; order <= 6; ++order) {
    const ButcherTableau t = tableau_for_order(order);
    EXPECT_EQ(t.order, order);
    EXPECT_NEAR(t.gamma.sum(), 1.0, 1e-15);
    for (int i = 0; i < t.stages(); ++i)
      for (int j = i; j < t.stages(); ++j) EXPECT_EQ(t.beta(i, j), 0.0);
  }
  Eigen::MatrixXd implicit = Eigen::MatrixXd::Zero(1, 1);
  implicit(0, 0) = 1.0;
  EXPECT_THROW(ButcherTableau::make("bad", 1, Eigen::VectorXd::Ones(1), implicit, Eigen::VectorXd::Ones(1)), Error);
  EXPECT_THROW(ButcherTableau::make("bad", 1, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(1, 1),
                                    Eigen::VectorXd::Constant(1, 0.5)),
               Error);
  // Euler claimed as order 2 fails the order conditions.
  EXPECT_THROW(ButcherTableau::make("bad", 2, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(1, 1),
                                    Eigen::VectorXd::Ones(1)),
               Error);
  EXPECT_EQ(tableau_by_name("heun").order, 2);
  EXPECT_THROW(tableau_by_name("nope"), Error);
}

TEST(Ode, ZeroFieldAndEuler) {
  const Manifold s = Manifold::sphere(1.0);
  const Vec3 x = Vec3(0, 0.6, 0.8);
  const OdeRhs zero = [](double, const Vec3&) { return Vec3::Zero(); };
  EXPECT_EQ(rk_ambient_step(tableau_for_order(4), s, zero, 0.0, x, 0.1), x);
  EXPECT_EQ(projected_rk_step(tableau_for_order(4), s, zero, 0.0, x, 0.1), x);
  const OdeRhs g = solid_body();
  const Vec3 e = rk_ambient_step(tableau_by_name("euler"), s, g, 0.0, x, 0.1);
  EXPECT_LT((e - (x + 0.1 * kAxis.cross(x))).norm(), 1e-16);
}

TEST(Ode, OneStepOrderRk4) {
  const Manifold s = Manifold::sphere(1.0);
  const Vec3 x = Vec3(0.6, -0.48, 0.64);
  std::vector<double> hs, errs;
  for (double h : {0.4, 0.2, 0.1, 0.05}) {
    hs.push_back(h);
    errs.push_back((projected_rk_step(tableau_for_order(4), s, solid_body(), 0.0, x, h) - rotate(x, h)).norm());
  }
  const RateFit f = fit_rate(hs, errs);
  EXPECT_GE(f.slope, 4.7);
  EXPECT_LE(f.slope, 5.3);
}

TEST(Ode, GlobalOrderAllTableaux) {
  for (int order = 1; order <= 6; ++order) {
    std::vector<double> hs, errs;
    const std::vector<int> steps = order <= 4 ? std::vector<int>{10, 20, 40, 80} : std::vector<int>{4, 8, 16};
    for (int n : steps) {
      hs.push_back(1.0 / n);
      errs.push_back(global_error(tableau_for_order(order), n));
    }
    const RateFit f = fit_rate(hs, errs);
    EXPECT_NEAR(f.slope, order, 0.3) << "order " << order;
  }
}

TEST(Ode, StaysOnManifold) {
  const Manifold s = Manifold::sphere(1.0);
  Vec3 y = Vec3(0.6, -0.48, 0.64);
  for (int i = 0; i < 1000; ++i) y = projected_rk_step(tableau_for_order(4), s, solid_body(), i * 0.01, y, 0.01);
  EXPECT_LE(std::abs(y.norm() - 1.0), 1e-11);
}

TEST(Ode, TorusRk4BeatsRk2) {
  const Manifold t = Manifold::torus();
  const OdeRhs g = [](double, const Vec3& y) {
    const Vec3 n = Manifold::torus().normal(y);
    const Vec3 v(-y.y(), y.x(), 0.5);
    return Vec3(v - v.dot(n) * n);
  };
  const Vec3 x0(4.0 / 3.0, 0, 0);
  Vec3 ref = x0;
  const double H = 0.2;
  for (int i = 0; i < 100; ++i) ref = projected_rk_step(tableau_for_order(4), t, g, i * H / 100, ref, H / 100);
  const Vec3 r2 = projected_rk_step(tableau_for_order(2), t, g, 0.0, x0, H);
  const Vec3 r4 = projected_rk_step(tableau_for_order(4), t, g, 0.0, x0, H);
  EXPECT_LT((r4 - ref).norm(), (r2 - ref).norm());
}

TEST(Ode, CharacteristicTrace) {
  const Manifold s = Manifold::sphere(1.0);
  const Vec3 x0 = Vec3(0.6, -0.48, 0.64);
  const std::vector<double> targets{0.01, 0.03, 0.05};
  const Trajectory z = characteristic_trace(tableau_for_order(4), s, VectorField::zero(), x0, 1.0, targets);
  for (double t : targets) EXPECT_EQ(z.at(t), x0);

  const VectorField a{[](const Vec3& x, double) { return Vec3(kAxis.cross(x)); }, true};
  const Trajectory tr = characteristic_trace(tableau_for_order(4), s, a, x0, 1.0, targets);
  for (double t : targets) EXPECT_LT((tr.at(t) - rotate(x0, t)).norm(), 1e-9);
  EXPECT_EQ(tr.departure(), tr.at(0.05));

  // Forward then backward returns to the start.
  const VectorField back{[](const Vec3& x, double) { return Vec3(-kAxis.cross(x)); }, true};
  const double h = 0.05;
  const Trajectory fw = characteristic_trace(tableau_for_order(4), s, a, x0, 1.0, std::vector<double>{h});
  const Trajectory bw =
      characteristic_trace(tableau_for_order(4), s, back, fw.departure(), 1.0, std::vector<double>{h});
  const double one_step = (fw.departure() - rotate(x0, h)).norm();
  EXPECT_LE((bw.departure() - x0).norm(), 2.0 * one_step + 1e-15);
}

TEST(Ode, QuadratureConstantCoefficients) {
  const Manifold s = Manifold::sphere(1.0);
  const Vec3 x0 = Vec3(0, 0, 1);
  for (int order = 1; order <= 6; ++order) {
    const GaussRule rule = gauss_rule_for_order(order);
    const double h = 0.1, lambda = 1.0;
    const auto tg = quadrature_targets(rule, h, true);
    const Trajectory tr = characteristic_trace(tableau_for_order(order), s, VectorField::zero(), x0, 2.0, tg);
    const ScalarField zero = [](const Vec3&, double) { return 0.0; };
    const ScalarField one = [](const Vec3&, double) { return 1.0; };
    const ScalarField lam = [&](const Vec3&, double) { return lambda; };
    EXPECT_EQ(mu_quad(zero, tr, h, rule), 1.0);
    EXPECT_NEAR(mu_quad(lam, tr, h, rule), std::exp(lambda * h), 1e-14);
    EXPECT_EQ(nu_quad(lam, zero, tr, h, rule), 0.0);
    EXPECT_NEAR(nu_quad(zero, one, tr, h, rule), h, 1e-14);
    // b(x, t) = t: integral of t0 - tau over [0, h].
    const ScalarField bt = [](const Vec3&, double t) { return t; };
    EXPECT_NEAR(mu_quad(bt, tr, h, rule), std::exp(2.0 * h - h * h / 2.0), 1e-14);
  }
}

TEST(Ode, QuadratureExponentialWithinRuleError) {
  // nu with b = lambda integrates exp(lambda tau); rules with >= 3 points are
  // accurate to 1e-10 at h = 0.1.
  const Manifold s = Manifold::sphere(1.0);
  const double h = 0.1, lambda = 1.0;
  const ScalarField one = [](const Vec3&, double) { return 1.0; };
  const ScalarField lam = [&](const Vec3&, double) { return lambda; };
  for (int n = 3; n <= 8; ++n) {
    const GaussRule rule = gauss_rule(n);
    const Trajectory tr = characteristic_trace(tableau_for_order(4), s, VectorField::zero(), Vec3(0, 0, 1), 2.0,
                                               quadrature_targets(rule, h, true));
    EXPECT_NEAR(nu_quad(lam, one, tr, h, rule), (std::exp(lambda * h) - 1.0) / lambda, 1e-10) << "n " << n;
  }
}

TEST(Ode, QuadratureAccumulatedOrder) {
  // Defects |Q1 - mu| and |Q2 - nu| summed over [0, 1] along the exact
  // characteristic of a solid-body rotation decay like h^(l+1).
  const Manifold s = Manifold::sphere(1.0);
  const double w = 3.0;
  const VectorField a{[w](const Vec3& x, double) { return Vec3(w * kAxis.cross(x)); }, true};
  const ScalarField b = [](const Vec3& x, double t) { return 0.5 * x.z() + 0.3 * std::sin(t) * x.x(); };
  const ScalarField c = [](const Vec3& x, double t) { return std::cos(t) + x.y(); };
  const GaussRule fine = gauss_rule(8);
  const Vec3 x0 = Vec3(1, 0.2, -0.4).normalized();
  auto integ = [&](auto f, double lo, double hi) {
    double acc = 0.0;
    const double d = (hi - lo) / 8.0;
    for (int i = 0; i < 8; ++i)
      for (int k = 0; k < 8; ++k) acc += d * fine.weights[k] * f(lo + d * (i + fine.nodes[k]));
    return acc;
  };
  for (int order = 1; order <= 4; ++order) {
    const GaussRule rule = gauss_rule_for_order(order);
    std::vector<double> hs, e1, e2;
    for (int steps : {8, 16, 32}) {
      const double h = 1.0 / steps;
      double s1 = 0.0, s2 = 0.0;
      for (int i = 0; i < steps; ++i) {
        const double t0 = 1.0 - i * h;
        const Vec3 x = rotate(x0, w * i * h);
        const Trajectory tr =
            characteristic_trace(tableau_for_order(order), s, a, x, t0, quadrature_targets(rule, h, true));
        auto bb = [&](double u) { return b(rotate(x, w * u), t0 - u); };
        const double mu = std::exp(integ(bb, 0.0, h));
        const double nu =
            integ([&](double u) { return std::exp(integ(bb, 0.0, u)) * c(rotate(x, w * u), t0 - u); }, 0.0, h);
        s1 += std::abs(mu_quad(b, tr, h, rule) - mu);
        s2 += std::abs(nu_quad(b, c, tr, h, rule) - nu);
      }
      hs.push_back(h);
      e1.push_back(s1);
      e2.push_back(s2);
    }
    EXPECT_NEAR(fit_rate(hs, e1).slope, order + 1, 0.3) << "order " << order;
    EXPECT_NEAR(fit_rate(hs, e2).slope, order + 1, 0.3) << "order " << order;
  }
}

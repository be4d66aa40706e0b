#include <algorithm>
#include <cmath>
#include <numbers>

#include "surfsl/errors.hpp"
#include "surfsl/sl.hpp"

namespace surfsl {

using std::numbers::pi;

VectorField torus_knot_field(int p, int q, double R) {
  if (!(R > 0.0) || !(R < 1.0)) fail(ErrorCode::InvalidArgument, "torus inner radius must lie in (0, 1)");
  const double pd = p, qd = q;
  return VectorField{[pd, qd, R](const Vec3& x, double) {
                       const double lam = std::atan2(x.y(), x.x());
                       const double phi = std::atan2(x.z(), std::hypot(x.x(), x.y()) - 1.0);
                       const double ring = 1.0 + R * std::cos(phi);
                       const double sp = std::sin(phi), cl = std::cos(lam), sl = std::sin(lam);
                       return Vec3(R * qd * sp * cl - pd * ring * sl, R * qd * sp * sl + pd * ring * cl,
                                   -R * qd * std::cos(phi));
                     },
                     true};
}

VectorField deformational_flow_field(double T) {
  if (!(T > 0.0)) fail(ErrorCode::InvalidArgument, "period must be positive");
  return VectorField{[T](const Vec3& x, double t) {
                       const double lam = std::atan2(x.y(), x.x());
                       const double theta = std::asin(std::clamp(x.z() / x.norm(), -1.0, 1.0));
                       const double mod = 10.0 / T * std::cos(pi * t / T);
                       const double shift = lam - 2.0 * pi * t / T;
                       const double s = std::sin(shift);
                       const double ct = std::cos(theta), st = std::sin(theta);
                       const double u = mod * s * s * std::sin(2.0 * theta) + 2.0 * pi / T * ct;
                       const double v = mod * std::sin(2.0 * shift) * ct;
                       const double cl = std::cos(lam), sl = std::sin(lam);
                       return Vec3(-sl * u - cl * st * v, cl * u - sl * st * v, ct * v);
                     },
                     false};
}

VectorField solid_body_field(const Vec3& omega) {
  return VectorField{[omega](const Vec3& x, double) { return Vec3(omega.cross(x)); }, true};
}

ScalarField gaussian_bells(std::vector<Vec3> centers, double sharpness, double amplitude) {
  return [centers = std::move(centers), sharpness, amplitude](const Vec3& x, double) {
    double s = 0.0;
    for (const Vec3& c : centers) s += std::exp(-sharpness * (x - c).squaredNorm());
    return amplitude * s;
  };
}

ScalarField torus_bells(double R) {
  return gaussian_bells({Vec3(-1.0 - R, 0.0, 0.0), Vec3(0.0, 1.0 - R, 0.0)}, 20.0);
}

ScalarField sphere_bells() {
  const double c = std::sqrt(3.0) / 2.0;
  return gaussian_bells({Vec3(c, 0.5, 0.0), Vec3(c, -0.5, 0.0)}, 5.0, 0.95);
}

double estimate_deformational_umax(double T, int n_lambda, int n_theta, int n_time) {
  if (n_lambda < 2 || n_theta < 2 || n_time < 2) fail(ErrorCode::InvalidArgument, "grid too coarse");
  const VectorField a = deformational_flow_field(T);
  double best = 0.0;
  for (int it = 0; it < n_time; ++it) {
    const double t = T * it / (n_time - 1);
    for (int il = 0; il < n_lambda; ++il) {
      const double lam = -pi + 2.0 * pi * il / (n_lambda - 1);
      for (int ith = 0; ith < n_theta; ++ith) {
        const double th = -pi / 2 + pi * ith / (n_theta - 1);
        const Vec3 x(std::cos(th) * std::cos(lam), std::cos(th) * std::sin(lam), std::sin(th));
        best = std::max(best, a(x, t).norm());
      }
    }
  }
  return best;
}

SLProblem torus_knot_problem(int p, int q, double R) {
  SLProblem prob{"torus_knot", Manifold::torus(1.0, R), {}, {}, {}, torus_bells(R), {}, false, 2.0 * pi};
  const VectorField u = torus_knot_field(p, q, R);
  // The PDE is v_t = a . grad v, so transport along u means a = -u.
  prob.velocity = VectorField{[u](const Vec3& x, double t) { return Vec3(-u(x, t)); }, true};
  const ScalarField v0 = prob.v0;
  const double pd = p, qd = q;
  // Exact flow in parameter space: lambda' = p, phi' = -q.
  prob.exact = [v0, pd, qd, R](const Vec3& x, double t) {
    const double lam = std::atan2(x.y(), x.x()) - pd * t;
    const double phi = std::atan2(x.z(), std::hypot(x.x(), x.y()) - 1.0) + qd * t;
    const double ring = 1.0 + R * std::cos(phi);
    return v0(Vec3(ring * std::cos(lam), ring * std::sin(lam), R * std::sin(phi)), 0.0);
  };
  return prob;
}

SLProblem deformational_problem(double T) {
  SLProblem prob{"deformational_flow", Manifold::sphere(1.0), {}, {}, {}, sphere_bells(), {}, true, T};
  const VectorField u = deformational_flow_field(T);
  prob.velocity = VectorField{[u](const Vec3& x, double t) { return Vec3(-u(x, t)); }, false};
  prob.exact = prob.v0;
  return prob;
}

SLProblem manufactured_problem(double omega, double beta, double gamma, double T) {
  SLProblem prob{"manufactured", Manifold::sphere(1.0), solid_body_field(Vec3(0.0, 0.0, omega)), {}, {}, {}, {},
                 false, T};
  prob.b = [beta](const Vec3& x, double) { return beta * x.z(); };
  prob.c = [gamma](const Vec3&, double t) { return gamma * std::sin(t); };
  prob.v0 = [](const Vec3& x, double) { return std::exp(x.x()); };
  // Characteristics are rotations about z, so b is constant along each one.
  prob.exact = [omega, beta, gamma, v0 = prob.v0](const Vec3& x, double t) {
    const double k = beta * x.z();
    const double ang = omega * t;
    const Vec3 foot(std::cos(ang) * x.x() - std::sin(ang) * x.y(), std::sin(ang) * x.x() + std::cos(ang) * x.y(),
                    x.z());
    const double forced = (std::exp(k * t) - std::cos(t) - k * std::sin(t)) / (1.0 + k * k);
    return std::exp(k * t) * v0(foot, 0.0) + gamma * forced;
  };
  return prob;
}

}  // namespace surfsl

#include "surfsl/remap.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "surfsl/errors.hpp"
#include "surfsl/lp.hpp"
#include "surfsl/parallel.hpp"

namespace surfsl {
namespace {

constexpr int kMaxRetries = 3;
constexpr double kGrowth = 1.5;
constexpr double kRankThreshold = 1e-10;
constexpr double kReproductionTol = 1e-8;
constexpr double kNormalEqTol = 1e-10;

// Points per warm-started block in for_each_weights.
constexpr std::size_t kBlock = 256;

// Boustrophedon order over a grid whose cells hold a few points each, so
// consecutive points are close.
std::vector<std::size_t> snake_order(std::span<const Vec3> pts) {
  Vec3 lo = pts.front(), hi = pts.front();
  for (const Vec3& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double cell = std::max(2.0 * (hi - lo).maxCoeff() / std::sqrt(static_cast<double>(pts.size())), 1e-12);
  std::vector<std::array<long, 3>> keys(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec3 c = (pts[i] - lo) / cell;
    const long x = static_cast<long>(c.x()), y = static_cast<long>(c.y()), z = static_cast<long>(c.z());
    const long ys = x % 2 ? -y : y;
    const long zs = (x + y) % 2 ? -z : z;
    keys[i] = {x, ys, zs};
  }
  std::vector<std::size_t> order(pts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  return order;
}

void check_degree(int degree) {
  if (degree < 0 || degree > 8) fail(ErrorCode::InvalidArgument, "polynomial degree must lie in [0, 8]");
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Pseudo-inverse form: with B = sqrt(W) V^T, W V^T (V W V^T)^+ p = sqrt(W) (B^+)^T p.
// For B P = Q1 [R11 R12] the minimum-norm y with B^T y = p is Q1 R11^-T (P^T p)_1.
Eigen::VectorXd mls_pinv(const LocalBasis& basis, const Eigen::VectorXd& sw) {
  const Eigen::MatrixXd B = sw.asDiagonal() * basis.V.transpose();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B);
  const Eigen::MatrixXd& R = qr.matrixQR();
  const Eigen::Index diag = std::min(B.rows(), B.cols());
  if (diag == 0 || !(std::abs(R(0, 0)) > 0.0)) fail(ErrorCode::RankDeficient, "all MLS weights vanish");
  Eigen::Index rank = 0;
  while (rank < diag && std::abs(R(rank, rank)) > kRankThreshold * std::abs(R(0, 0))) ++rank;
  const auto& perm = qr.colsPermutation().indices();
  Eigen::VectorXd y = Eigen::VectorXd::Zero(B.rows());
  for (Eigen::Index i = 0; i < rank; ++i) y(i) = basis.p(perm(i));
  R.topLeftCorner(rank, rank).transpose().triangularView<Eigen::Lower>().solveInPlace(y.head(rank));
  y = qr.householderQ() * y;
  return sw.cwiseProduct(y);
}

// Same weights through the normal equations on an independent row set: when
// the dropped rows are combinations of the kept ones (verified by row_basis),
// {a : V a = p} = {a : V_k a = p_k} and a = W V_k^T (V_k W V_k^T)^-1 p_k.
// Falls back to mls_pinv when the factorization or the residual check fails.
Eigen::VectorXd mls_solve(const LocalBasis& basis, const Eigen::VectorXd& sw) {
  RowBasis rb;
  try {
    rb = row_basis(basis.V, basis.p);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Inconsistent) throw;
    return mls_pinv(basis, sw);
  }
  const auto rank = static_cast<Eigen::Index>(rb.kept.size());
  if (rank == 0) return mls_pinv(basis, sw);
  const Eigen::Index n = basis.V.cols();
  Eigen::MatrixXd Bk(rank, n);
  Eigen::VectorXd pk(rank);
  for (Eigen::Index i = 0; i < rank; ++i) {
    const Eigen::Index row = rb.kept[static_cast<std::size_t>(i)];
    Bk.row(i) = basis.V.row(row).cwiseProduct(sw.transpose());
    pk(i) = basis.p(row);
  }
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(rank, rank);
  G.selfadjointView<Eigen::Lower>().rankUpdate(Bk);
  const Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(G);
  if (llt.info() != Eigen::Success) return mls_pinv(basis, sw);
  const Eigen::VectorXd a = sw.cwiseProduct(Bk.transpose() * llt.solve(pk));
  const double pscale = 1.0 + basis.p.cwiseAbs().maxCoeff();
  if (!((basis.V * a - basis.p).cwiseAbs().maxCoeff() <= kNormalEqTol * pscale)) return mls_pinv(basis, sw);
  return a;
}

}  // namespace

std::size_t poly_dim(int degree) {
  check_degree(degree);
  const auto k = static_cast<std::size_t>(degree);
  return (k + 1) * (k + 2) * (k + 3) / 6;
}

std::vector<std::array<int, 3>> monomial_exponents(int degree) {
  check_degree(degree);
  std::vector<std::array<int, 3>> out;
  out.reserve(poly_dim(degree));
  for (int d = 0; d <= degree; ++d) {
    for (int a = d; a >= 0; --a) {
      for (int b = d - a; b >= 0; --b) out.push_back({a, b, d - a - b});
    }
  }
  return out;
}

LocalBasis poly_basis(const Vec3& z, double r, std::span<const Vec3> pts, int degree) {
  if (!(r > 0.0)) fail(ErrorCode::InvalidArgument, "basis scale must be positive");
  if (pts.empty()) fail(ErrorCode::InvalidArgument, "empty point list");
  const auto exps = monomial_exponents(degree);
  const auto m = static_cast<Eigen::Index>(exps.size());
  const auto n = static_cast<Eigen::Index>(pts.size());
  LocalBasis out{Eigen::MatrixXd(m, n), Eigen::VectorXd::Zero(m)};
  out.p(0) = 1.0;
  // Powers u_c^e for e = 0..degree, reused across monomials.
  Eigen::MatrixXd pw(3, degree + 1);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Vec3 u = (pts[static_cast<std::size_t>(j)] - z) / r;
    for (int c = 0; c < 3; ++c) {
      pw(c, 0) = 1.0;
      for (int e = 1; e <= degree; ++e) pw(c, e) = pw(c, e - 1) * u(c);
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto& e = exps[static_cast<std::size_t>(i)];
      out.V(i, j) = pw(0, e[0]) * pw(1, e[1]) * pw(2, e[2]);
    }
  }
  return out;
}

double WeightSet::l1_norm() const {
  double s = 0.0;
  for (double w : weights) s += std::abs(w);
  return s;
}

double apply(const WeightSet& w, std::span<const double> values) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.support.size(); ++i) {
    if (w.support[i] >= values.size()) fail(ErrorCode::InvalidArgument, "value vector shorter than cloud");
    s += w.weights[i] * values[w.support[i]];
  }
  return s;
}

double mls_weight(MlsWeight kind, double s) {
  if (s < 0.0) s = -s;
  if (s >= 1.0) return 0.0;
  switch (kind) {
    case MlsWeight::WendlandC2: {
      const double t = 1.0 - s;
      return t * t * t * t * (4.0 * s + 1.0);
    }
    case MlsWeight::Bump:
      return std::exp(1.0 - 1.0 / (1.0 - s * s));
  }
  return 0.0;
}

double resolve_radius(const PointCloud& cloud, const RemapConfig& cfg) {
  check_degree(cfg.degree);
  return std::visit(
      overloaded{
          [](const FixedRadius& f) {
            if (!(f.r > 0.0)) fail(ErrorCode::InvalidArgument, "fixed radius must be positive");
            return f.r;
          },
          [&](const EpsilonScaledRadius& e) {
            if (!(e.theta > 0.0) || !(e.epsilon > 0.0)) {
              fail(ErrorCode::InvalidArgument, "epsilon-scaled radius needs theta, epsilon > 0");
            }
            const auto h = cloud.fill_distance();
            if (!h) fail(ErrorCode::InvalidArgument, "epsilon-scaled radius needs the fill distance");
            return e.theta * *h / e.epsilon;
          },
          [&](const MinPointsRadius& mp) {
            if (!(mp.factor >= 2.0)) fail(ErrorCode::InvalidArgument, "min_points factor must be >= 2");
            const auto need =
                static_cast<std::size_t>(std::ceil(mp.factor * static_cast<double>(poly_dim(cfg.degree))));
            if (need > cloud.size()) {
              std::ostringstream os;
              os << "min_points needs " << need << " points but the cloud has " << cloud.size();
              fail(ErrorCode::InvalidArgument, os.str());
            }
            double r = 0.0;
            for (const Vec3& x : cloud.points()) r = std::max(r, cloud.kth_neighbor_distance(x, need));
            return r;
          },
      },
      cfg.radius);
}

Remapper::Remapper(const PointCloud& cloud, RemapConfig cfg)
    : cloud_(&cloud), cfg_(std::move(cfg)), radius_(resolve_radius(cloud, cfg_)) {}

template <class F>
WeightSet Remapper::with_retries(const Vec3& z, F&& compute) const {
  double r = radius_;
  for (int attempt = 0;; ++attempt) {
    try {
      return compute(z, r);
    } catch (const Error& e) {
      const bool retryable =
          e.code() == ErrorCode::NoPolynomialReproduction || e.code() == ErrorCode::RankDeficient;
      if (!retryable || attempt == kMaxRetries) throw;
      r *= kGrowth;
    }
  }
}

WeightSet Remapper::weights(const Vec3& z) const {
  return cfg_.op == RemapOperator::L1 ? l1_weights(z) : mls_weights(z);
}

WeightSet Remapper::l1_weights(const Vec3& z) const { return l1_weights(z, nullptr); }

WeightSet Remapper::l1_weights(const Vec3& z, std::vector<std::size_t>* basis) const {
  return with_retries(z, [this, basis](const Vec3& p, double r) { return l1_at(p, r, basis); });
}

WeightSet Remapper::mls_weights(const Vec3& z) const {
  return with_retries(z, [this](const Vec3& p, double r) { return mls_at(p, r); });
}

// `basis` carries cloud indices of the previous optimal basis in and of this
// one out; null means a cold start.
WeightSet Remapper::l1_at(const Vec3& z, double r, std::vector<std::size_t>* basis) const {
  WeightSet w;
  w.eval_point = z;
  w.radius = r;
  cloud_->ball_query(z, r, w.support);
  if (w.support.empty()) fail(ErrorCode::NoPolynomialReproduction, "empty ball");
  std::vector<Vec3> pts;
  pts.reserve(w.support.size());
  for (std::size_t j : w.support) pts.push_back((*cloud_)[j]);
  const LocalBasis local = poly_basis(z, r, pts, cfg_.degree);
  std::vector<Eigen::Index> start;
  if (basis) {
    // ball_query returns sorted indices.
    for (std::size_t g : *basis) {
      const auto it = std::lower_bound(w.support.begin(), w.support.end(), g);
      if (it != w.support.end() && *it == g) start.push_back(it - w.support.begin());
    }
  }
  const L1Result res = l1_minimize(local.V, local.p, L1Method::LongStep, start);
  w.weights.assign(res.a.data(), res.a.data() + res.a.size());
  if (basis) {
    basis->clear();
    for (Eigen::Index j : res.basis) basis->push_back(w.support[static_cast<std::size_t>(j)]);
  }
  return w;
}

WeightSet Remapper::mls_at(const Vec3& z, double r) const {
  WeightSet w;
  w.eval_point = z;
  w.radius = r;
  cloud_->ball_query(z, r, w.support);
  if (w.support.empty()) fail(ErrorCode::RankDeficient, "empty ball");
  const auto n = static_cast<Eigen::Index>(w.support.size());
  std::vector<Vec3> pts;
  pts.reserve(w.support.size());
  Eigen::VectorXd sw(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Vec3& x = (*cloud_)[w.support[static_cast<std::size_t>(j)]];
    pts.push_back(x);
    sw(j) = std::sqrt(mls_weight(cfg_.weight, (x - z).norm() / r));
  }
  const LocalBasis basis = poly_basis(z, r, pts, cfg_.degree);
  const Eigen::VectorXd a = mls_solve(basis, sw);
  w.weights.assign(a.data(), a.data() + a.size());
  return w;
}

WeightSet l1_weights(const PointCloud& cloud, const Vec3& z, const RemapConfig& cfg) {
  return Remapper(cloud, cfg).l1_weights(z);
}

WeightSet mls_weights(const PointCloud& cloud, const Vec3& z, const RemapConfig& cfg) {
  return Remapper(cloud, cfg).mls_weights(z);
}

void Remapper::for_each_weights(std::span<const Vec3> points,
                                const std::function<void(std::size_t, const WeightSet&)>& body,
                                bool parallel) const {
  if (points.empty()) return;
  const std::vector<std::size_t> order = snake_order(points);
  const std::size_t blocks = (order.size() + kBlock - 1) / kBlock;
  parallel_for(
      blocks,
      [&](std::size_t b) {
        std::vector<std::size_t> basis;
        const std::size_t end = std::min(order.size(), (b + 1) * kBlock);
        for (std::size_t k = b * kBlock; k < end; ++k) {
          const std::size_t i = order[k];
          if (cfg_.op == RemapOperator::L1) {
            body(i, l1_weights(points[i], &basis));
          } else {
            body(i, mls_weights(points[i]));
          }
        }
      },
      parallel);
}

double lebesgue_constant(const Remapper& remap, std::span<const Vec3> eval_points, bool parallel) {
  std::vector<double> norms(eval_points.size(), 0.0);
  remap.for_each_weights(
      eval_points, [&](std::size_t i, const WeightSet& w) { norms[i] = w.l1_norm(); }, parallel);
  double best = 0.0;
  for (double v : norms) best = std::max(best, v);
  return best;
}

double lebesgue_constant(const PointCloud& cloud, const RemapConfig& cfg, const PointCloud& dense,
                         bool parallel) {
  if (dense.size() < 20 * cloud.size()) {
    fail(ErrorCode::InvalidArgument, "dense sample must have at least 20x the cloud's points");
  }
  return lebesgue_constant(Remapper(cloud, cfg), dense.points(), parallel);
}

}  // namespace surfsl

#include "surfsl/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/LU>
#include <Eigen/QR>

#include "surfsl/errors.hpp"

namespace surfsl {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kRankTol = 1e-10;
constexpr double kConsistencyTol = 1e-8;

// Dense revised simplex over structural columns 0..n-1 and artificial
// columns n..n+m-1 (identity). The basis inverse is kept explicitly.
class Simplex {
 public:
  Simplex(const MatrixXd& A, const VectorXd& b, const SimplexOptions& opts)
      : A_(A), b_(b), opts_(opts), m_(A.rows()), n_(A.cols()) {
    head_.resize(m_);
    refactor_artificial();

    cap_ = 50 * (m_ + n_);
    bland_after_ = 10 * (m_ + n_);
  }

  // Installs a structural starting basis. Returns false (and leaves the
  // artificial basis in place) if it is singular or infeasible.
  bool crash(const std::vector<Index>& cols) {
    if (static_cast<Index>(cols.size()) != m_) return false;
    MatrixXd B(m_, m_);
    for (Index i = 0; i < m_; ++i) {
      if (cols[i] < 0 || cols[i] >= n_) return false;
      B.col(i) = A_.col(cols[i]);
    }
    Eigen::PartialPivLU<MatrixXd> lu(B);
    const VectorXd xb = lu.solve(b_);
    if (!((B * xb - b_).cwiseAbs().maxCoeff() <= opts_.feas_tol * (1.0 + b_.cwiseAbs().maxCoeff()))) return false;
    if (xb.minCoeff() < -opts_.feas_tol) return false;
    for (Index i = 0; i < m_; ++i) basic_[head_[i]] = -1;
    for (Index i = 0; i < m_; ++i) {
      if (basic_[cols[i]] >= 0) {
        refactor_artificial();
        return false;
      }
      head_[i] = cols[i];
      basic_[cols[i]] = i;
    }
    binv_ = lu.inverse();
    xb_ = xb.cwiseMax(0.0);
    return true;
  }

  // Returns false if unbounded.
  bool optimize(const VectorXd& cost_struct, bool phase_one) {
    VectorXd cb(m_);
    for (;;) {
      if (iterations_ >= cap_) {
        std::ostringstream os;
        os << "simplex hit the iteration cap " << cap_ << " (m=" << m_ << ", n=" << n_ << ")";
        fail(ErrorCode::MaxIterations, os.str());
      }
      for (Index i = 0; i < m_; ++i) cb[i] = basis_cost(head_[i], cost_struct, phase_one);
      y_.noalias() = binv_.transpose() * cb;
      const double tol = opts_.opt_tol * std::max(1.0, cost_scale_);

      // Dantzig pricing; Bland's rule (first improving index) once past bland_after_.
      Index q = -1;
      const bool bland = iterations_ >= bland_after_;
      double best = -tol;
      for (Index j = 0; j < n_; ++j) {
        if (basic_[j] >= 0) continue;
        const double dj = reduced_cost(j, cost_struct);
        if (dj < best) {
          q = j;
          if (bland) break;
          best = dj;
        }
      }
      if (q < 0) return true;

      u_.noalias() = binv_ * A_.col(q);
      const VectorXd& u = u_;
      Index r = -1;
      double theta = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < m_; ++i) {
        double ratio;
        if (!phase_one && head_[i] >= n_) {
          // Artificial stuck in the basis at level zero: must not move.
          if (std::abs(u[i]) <= opts_.pivot_tol) continue;
          ratio = 0.0;
        } else {
          if (u[i] <= opts_.pivot_tol) continue;
          ratio = std::max(xb_[i], 0.0) / u[i];
        }
        const double slack = 1e-14 * std::max(1.0, theta);
        if (r < 0 || ratio < theta - slack || (ratio <= theta + slack && head_[i] < head_[r])) {
          theta = std::min(theta, ratio);
          r = i;
        }
      }
      if (r < 0) return false;
      pivot(r, q, u, theta);
    }
  }

  double artificial_sum() const {
    double s = 0.0;
    for (Index i = 0; i < m_; ++i) {
      if (head_[i] >= n_) s += std::max(xb_[i], 0.0);
    }
    return s;
  }

  void drive_out_artificials() {
    for (Index r = 0; r < m_; ++r) {
      if (head_[r] < n_) continue;
      const Eigen::RowVectorXd row = binv_.row(r) * A_;
      Index q = -1;
      double best = opts_.pivot_tol;
      for (Index j = 0; j < n_; ++j) {
        if (basic_[j] >= 0) continue;
        if (std::abs(row[j]) > best) {
          best = std::abs(row[j]);
          q = j;
        }
      }
      if (q < 0) continue;  // redundant row; the artificial stays pinned at zero
      const VectorXd u = binv_ * A_.col(q);
      pivot(r, q, u, std::max(xb_[r], 0.0) / u[r]);
    }
  }

  void refactor_artificial() {
    basic_.assign(n_ + m_, -1);
    for (Index i = 0; i < m_; ++i) {
      head_[i] = n_ + i;
      basic_[n_ + i] = i;
    }
    binv_ = MatrixXd::Identity(m_, m_);
    xb_ = b_;
  }

  void refactor() {
    MatrixXd B(m_, m_);
    for (Index i = 0; i < m_; ++i) {
      if (head_[i] < n_) {
        B.col(i) = A_.col(head_[i]);
      } else {
        B.col(i).setZero();
        B(head_[i] - n_, i) = 1.0;
      }
    }
    Eigen::PartialPivLU<MatrixXd> lu(B);
    binv_ = lu.inverse();
    xb_ = lu.solve(b_);
  }

  std::vector<Index> basis() const {
    for (Index j : head_) {
      if (j >= n_) return {};
    }
    return head_;
  }

  VectorXd primal() const {
    VectorXd x = VectorXd::Zero(n_);
    for (Index i = 0; i < m_; ++i) {
      if (head_[i] < n_) x[head_[i]] = xb_[i];
    }
    return x;
  }

  VectorXd dual(const VectorXd& cost_struct) const {
    VectorXd cb(m_);
    for (Index i = 0; i < m_; ++i) cb[i] = basis_cost(head_[i], cost_struct, false);
    return binv_.transpose() * cb;
  }

  void set_cost_scale(double s) { cost_scale_ = s; }
  int iterations() const { return static_cast<int>(iterations_); }

 private:
  double reduced_cost(Index j, const VectorXd& cost_struct) const {
    return cost_struct[j] - A_.col(j).dot(y_);
  }

  double basis_cost(Index j, const VectorXd& cost_struct, bool phase_one) const {
    if (j >= n_) return phase_one ? 1.0 : 0.0;
    return phase_one ? 0.0 : cost_struct[j];
  }

  void pivot(Index r, Index q, const VectorXd& u, double theta) {
    xb_ -= theta * u;
    xb_[r] = theta;
    const double piv = u[r];
    binv_.row(r) /= piv;
    for (Index i = 0; i < m_; ++i) {
      if (i != r && u[i] != 0.0) binv_.row(i) -= u[i] * binv_.row(r);
    }
    basic_[head_[r]] = -1;
    head_[r] = q;
    basic_[q] = r;
    ++iterations_;
    if (iterations_ % opts_.refactor_every == 0) refactor();
  }

  const MatrixXd& A_;
  const VectorXd& b_;
  SimplexOptions opts_;
  Index m_, n_;
  std::vector<Index> head_;
  std::vector<Index> basic_;
  MatrixXd binv_;
  VectorXd xb_;
  VectorXd y_, u_;
  Index iterations_ = 0;
  Index cap_ = 0;
  Index bland_after_ = 0;
  double cost_scale_ = 1.0;
};

}  // namespace

namespace {

// Column-pivoted QR of A^T with the numerical rank and the consistency check
// of the dropped rows. A^T P = Q R; the first `rank` pivots are the kept rows.
// Q itself is never formed.
struct RowQR {
  Eigen::ColPivHouseholderQR<MatrixXd> qr;
  Index rank = 0;
};

Eigen::ColPivHouseholderQR<MatrixXd> pivoted_r(const MatrixXd& A) {
  // For a tall A^T = Q1 R, pivoting R gives the same pivots and R factor as
  // pivoting A^T, and the blocked unpivoted pass is much cheaper.
  if (A.cols() <= 2 * A.rows()) return Eigen::ColPivHouseholderQR<MatrixXd>(A.transpose());
  Eigen::HouseholderQR<MatrixXd> tall(A.transpose());
  const MatrixXd R = tall.matrixQR().topRows(A.rows()).triangularView<Eigen::Upper>();
  return Eigen::ColPivHouseholderQR<MatrixXd>(R);
}

RowQR row_qr(const MatrixXd& A, const VectorXd& b) {
  RowQR out{pivoted_r(A), 0};
  const Index m = A.rows();
  const MatrixXd& QR = out.qr.matrixQR();
  const auto& perm = out.qr.colsPermutation().indices();
  const Index diag = std::min(A.rows(), A.cols());
  const double top = std::abs(QR(0, 0));
  Index rank = 0;
  while (rank < diag && std::abs(QR(rank, rank)) > kRankTol * top) ++rank;
  out.rank = rank;
  if (rank < m) {
    // Dropped rows are combinations W of the kept rows: W = R11^{-1} R12.
    const MatrixXd W = QR.topLeftCorner(rank, rank)
                           .triangularView<Eigen::Upper>()
                           .solve(QR.block(0, rank, rank, m - rank));
    VectorXd bk(rank);
    for (Index i = 0; i < rank; ++i) bk[i] = b[perm[i]];
    const VectorXd implied = W.transpose() * bk;
    const double bscale = 1.0 + b.cwiseAbs().maxCoeff();
    for (Index j = 0; j < m - rank; ++j) {
      const double mismatch = std::abs(b[perm[rank + j]] - implied[j]);
      if (mismatch > kConsistencyTol * bscale) {
        std::ostringstream os;
        os << "row " << perm[rank + j] << " contradicts the kept rows (mismatch " << mismatch << ")";
        fail(ErrorCode::Inconsistent, os.str());
      }
    }
  }
  return out;
}

bool zero_matrix(const MatrixXd& A, const VectorXd& b) {
  if (A.cols() != 0 && A.cwiseAbs().maxCoeff() != 0.0) return false;
  const double bscale = 1.0 + b.cwiseAbs().maxCoeff();
  if (b.cwiseAbs().maxCoeff() > kConsistencyTol * bscale) {
    fail(ErrorCode::Inconsistent, "zero constraint matrix with nonzero right-hand side");
  }
  return true;
}

}  // namespace

RowReduction preprocess_rows(const MatrixXd& A, const VectorXd& b) {
  if (A.rows() != b.size()) fail(ErrorCode::InvalidArgument, "row count of A and b differ");
  RowReduction out;
  if (A.rows() == 0) {
    out.A = A;
    out.b = b;
    return out;
  }
  if (zero_matrix(A, b)) {
    out.A.resize(0, A.cols());
    out.b.resize(0);
    return out;
  }
  const RowQR f = row_qr(A, b);
  const auto& perm = f.qr.colsPermutation().indices();
  std::vector<Index> kept(perm.data(), perm.data() + f.rank);
  std::sort(kept.begin(), kept.end());
  out.A.resize(f.rank, A.cols());
  out.b.resize(f.rank);
  for (Index i = 0; i < f.rank; ++i) {
    out.A.row(i) = A.row(kept[i]);
    out.b[i] = b[kept[i]];
  }
  out.kept = std::move(kept);
  return out;
}

namespace {

std::vector<Index> rank_prefix(const Eigen::ColPivHouseholderQR<MatrixXd>& qr, Index& rank) {
  const MatrixXd& R = qr.matrixQR();
  const Index diag = std::min(R.rows(), R.cols());
  rank = 0;
  while (rank < diag && std::abs(R(rank, rank)) > kRankTol * std::abs(R(0, 0))) ++rank;
  const auto& perm = qr.colsPermutation().indices();
  return std::vector<Index>(perm.data(), perm.data() + rank);
}

}  // namespace

RowBasis row_basis(const MatrixXd& A, const VectorXd& b) {
  if (A.rows() != b.size()) fail(ErrorCode::InvalidArgument, "row count of A and b differ");
  RowBasis out;
  const Index m = A.rows(), n = A.cols();
  if (m == 0 || zero_matrix(A, b)) return out;
  const Index s = std::min(n, 4 * m + 8);
  if (s < n) {
    MatrixXd sample(s, m);
    for (Index k = 0; k < s; ++k) sample.row(k) = A.col(k * n / s).transpose();
    const Eigen::ColPivHouseholderQR<MatrixXd> qr(sample);
    Index rank = 0;
    std::vector<Index> kept = rank_prefix(qr, rank);
    const MatrixXd& R = qr.matrixQR();
    bool ok = rank > 0;
    if (ok && rank < m) {
      const auto& perm = qr.colsPermutation().indices();
      const MatrixXd W =
          R.topLeftCorner(rank, rank).triangularView<Eigen::Upper>().solve(R.block(0, rank, rank, m - rank));
      MatrixXd Ak(rank, n);
      VectorXd bk(rank);
      for (Index i = 0; i < rank; ++i) {
        Ak.row(i) = A.row(perm[i]);
        bk[i] = b[perm[i]];
      }
      const double ascale = 1.0 + A.cwiseAbs().maxCoeff();
      const double bscale = 1.0 + b.cwiseAbs().maxCoeff();
      const MatrixXd implied = W.transpose() * Ak;
      const VectorXd implied_b = W.transpose() * bk;
      for (Index j = 0; j < m - rank && ok; ++j) {
        ok = (A.row(perm[rank + j]) - implied.row(j)).cwiseAbs().maxCoeff() <= kConsistencyTol * ascale;
        if (ok && std::abs(b[perm[rank + j]] - implied_b[j]) > kConsistencyTol * bscale) {
          std::ostringstream os;
          os << "row " << perm[rank + j] << " contradicts the kept rows";
          fail(ErrorCode::Inconsistent, os.str());
        }
      }
    }
    if (ok) {
      out.kept = std::move(kept);
      out.r = std::sqrt(static_cast<double>(n) / static_cast<double>(s)) *
              MatrixXd(R.topLeftCorner(rank, rank).triangularView<Eigen::Upper>());
      return out;
    }
  }
  const RowQR f = row_qr(A, b);
  Index rank = 0;
  out.kept = rank_prefix(f.qr, rank);
  out.r = f.qr.matrixQR().topLeftCorner(rank, rank).triangularView<Eigen::Upper>();
  return out;
}

LPSolution solve_standard_form(const StandardLP& lp, const SimplexOptions& opts,
                               const std::vector<Eigen::Index>& start_basis) {
  const Index m = lp.A.rows(), n = lp.A.cols();
  if (lp.b.size() != m || lp.c.size() != n) fail(ErrorCode::InvalidArgument, "LP dimension mismatch");
  if (m > n) fail(ErrorCode::InvalidArgument, "LP has more rows than columns; preprocess rows first");

  LPSolution sol;
  if (m == 0) {
    sol.x = VectorXd::Zero(n);
    sol.dual.resize(0);
    sol.status = (n > 0 && lp.c.minCoeff() < 0.0) ? LPStatus::Unbounded : LPStatus::Optimal;
    return sol;
  }

  MatrixXd A = lp.A;
  VectorXd b = lp.b;
  VectorXd sign = VectorXd::Ones(m);
  for (Index i = 0; i < m; ++i) {
    if (b[i] < 0.0) {
      A.row(i) *= -1.0;
      b[i] = -b[i];
      sign[i] = -1.0;
    }
  }
  const double bscale = 1.0 + b.cwiseAbs().maxCoeff();

  Simplex sx(A, b, opts);
  if (start_basis.empty() || !sx.crash(start_basis)) {
    sx.optimize(VectorXd::Zero(n), /*phase_one=*/true);
    sx.refactor();
    if (sx.artificial_sum() > opts.feas_tol * bscale) {
      sol.status = LPStatus::Infeasible;
      sol.iterations = sx.iterations();
      sol.x = sx.primal();
      return sol;
    }
    sx.drive_out_artificials();
  }

  sx.set_cost_scale(n > 0 ? lp.c.cwiseAbs().maxCoeff() : 1.0);
  const bool bounded = sx.optimize(lp.c, /*phase_one=*/false);
  sol.iterations = sx.iterations();
  if (!bounded) {
    sol.status = LPStatus::Unbounded;
    sol.x = sx.primal();
    return sol;
  }

  // Re-price from a fresh factorization so drift in the updated inverse
  // cannot leave a slightly negative reduced cost behind.
  sx.refactor();
  if (!sx.optimize(lp.c, /*phase_one=*/false)) {
    sol.status = LPStatus::Unbounded;
    sol.x = sx.primal();
    return sol;
  }
  sol.iterations = sx.iterations();
  sx.refactor();
  sol.status = LPStatus::Optimal;
  sol.basis = sx.basis();
  sol.x = sx.primal();
  sol.objective = lp.c.dot(sol.x);
  const VectorXd y = sx.dual(lp.c);
  sol.dual = y.cwiseProduct(sign);

  // Duality certificate: A^T y <= c and b.y = c.x.
  const double cscale = std::max(1.0, lp.c.cwiseAbs().maxCoeff());
  const double dual_infeas = (lp.A.transpose() * sol.dual - lp.c).maxCoeff();
  const double gap = std::abs(lp.b.dot(sol.dual) - sol.objective);
  const double resid = (lp.A * sol.x - lp.b).cwiseAbs().maxCoeff();
  if (dual_infeas > 1e-9 * cscale || gap > 1e-9 * (1.0 + std::abs(sol.objective)) ||
      resid > opts.feas_tol * bscale || sol.x.minCoeff() < -opts.feas_tol) {
    std::ostringstream os;
    os << "optimality certificate failed: dual infeasibility " << dual_infeas << ", gap " << gap
       << ", primal residual " << resid << ", min x " << sol.x.minCoeff();
    fail(ErrorCode::NumericalFailure, os.str());
  }
  return sol;
}


namespace {

// Long-step simplex for min ||a||_1 s.t. A a = b with A of full row rank.
// The basis holds m columns; basic coefficients are free and carry the sign
// s_i they had when last nonzero (the x+ or x- copy in the split system).
class L1Simplex {
 public:
  L1Simplex(const MatrixXd& A, const VectorXd& b) : A_(A), b_(b), m_(A.rows()), n_(A.cols()) {
    cap_ = 50 * (m_ + 2 * n_);
    bland_after_ = 10 * (m_ + 2 * n_);
  }

  void start(const std::vector<Index>& cols) {
    head_ = cols;
    pos_.assign(n_, -1);
    for (Index i = 0; i < m_; ++i) pos_[head_[i]] = i;
    refactor();
    init_active();
    sgn_.resize(m_);
    for (Index i = 0; i < m_; ++i) sgn_[i] = xb_[i] >= 0.0 ? 1.0 : -1.0;
  }

  void solve(double tol) {
    std::vector<std::pair<double, Index>> bps;
    for (;;) {
      if (iterations_ >= cap_) {
        std::ostringstream os;
        os << "l1 simplex hit the iteration cap " << cap_ << " (m=" << m_ << ", n=" << n_ << ")";
        fail(ErrorCode::MaxIterations, os.str());
      }
      y_.noalias() = binv_.transpose() * sgn_;

      Index q = -1;
      double gq = 0.0;
      const bool bland = iterations_ >= bland_after_;
      double best = tol;
      if (act_cols_.cols() != static_cast<Index>(active_.size())) gather_active();
      g_.noalias() = act_cols_.transpose() * y_;
      for (std::size_t k = 0; k < active_.size(); ++k) {
        const Index j = active_[k];
        if (pos_[j] >= 0) continue;
        const double gj = g_[static_cast<Index>(k)];
        const double excess = std::abs(gj) - 1.0;
        if (excess > best && (!bland || q < 0 || j < q)) {
          q = j;
          gq = gj;
          if (!bland) best = excess;
        }
      }
      if (q < 0) {
        if (grow_active(tol)) continue;
        return;
      }

      const double sigma = gq > 0.0 ? 1.0 : -1.0;
      w_.noalias() = binv_ * A_.col(q);
      // Moving a_q = sigma t changes a_B by -t delta; the objective slope
      // starts at 1 - |g_q| < 0 and rises by 2|delta_i| at each zero crossing.
      bps.clear();
      for (Index i = 0; i < m_; ++i) {
        const double delta = sigma * w_[i];
        if (std::abs(delta) <= kPivotTol || sgn_[i] * delta <= 0.0) continue;
        bps.emplace_back(std::max(xb_[i] / delta, 0.0), i);
      }
      std::sort(bps.begin(), bps.end(), [&](const auto& a, const auto& b) {
        return a.first < b.first || (a.first == b.first && head_[a.second] < head_[b.second]);
      });
      double slope = 1.0 - std::abs(gq);
      Index r = -1;
      double t = 0.0;
      std::size_t passed = 0;
      for (; passed < bps.size(); ++passed) {
        const Index i = bps[passed].second;
        slope += 2.0 * std::abs(w_[i]);
        // Bland mode takes the first breakpoint: a plain split-system pivot.
        if (slope >= 0.0 || bland) {
          r = i;
          t = bps[passed].first;
          break;
        }
      }
      if (r < 0) fail(ErrorCode::NumericalFailure, "l1 simplex found a descent ray");
      for (std::size_t k = 0; k < passed; ++k) sgn_[bps[k].second] = -sgn_[bps[k].second];

      xb_.noalias() -= (t * sigma) * w_;
      xb_[r] = t * sigma;
      sgn_[r] = sigma;
      const double piv = w_[r];
      binv_.row(r) /= piv;
      for (Index i = 0; i < m_; ++i) {
        if (i != r && w_[i] != 0.0) binv_.row(i) -= w_[i] * binv_.row(r);
      }
      pos_[head_[r]] = -1;
      head_[r] = q;
      pos_[q] = r;
      if (++iterations_ % kRefactorEvery == 0) refactor();
    }
  }

  // Working set of priced columns: the basis plus an evenly strided subset.
  void init_active() {
    in_active_.assign(n_, 0);
    active_.clear();
    const Index target = std::min(n_, 4 * m_ + 8);
    for (Index k = 0; k < target; ++k) add_active(k * n_ / target);
    for (Index j : head_) add_active(j);
  }

  void gather_active() {
    act_cols_.resize(m_, static_cast<Index>(active_.size()));
    for (std::size_t k = 0; k < active_.size(); ++k) act_cols_.col(static_cast<Index>(k)) = A_.col(active_[k]);
  }

  void add_active(Index j) {
    if (in_active_[j]) return;
    in_active_[j] = 1;
    active_.push_back(j);
  }

  // Prices the columns outside the working set and adds the most violated
  // ones. Returns false when every column prices out (global optimum).
  bool grow_active(double tol) {
    if (static_cast<Index>(active_.size()) == n_) return false;
    std::vector<std::pair<double, Index>> viol;
    for (Index j = 0; j < n_; ++j) {
      if (in_active_[j]) continue;
      const double excess = std::abs(A_.col(j).dot(y_)) - 1.0;
      if (excess > tol) viol.emplace_back(-excess, j);
    }
    if (viol.empty()) return false;
    const std::size_t keep = std::min(viol.size(), static_cast<std::size_t>(2 * m_ + 8));
    std::partial_sort(viol.begin(), viol.begin() + static_cast<std::ptrdiff_t>(keep), viol.end());
    for (std::size_t k = 0; k < keep; ++k) add_active(viol[k].second);
    return true;
  }

  void refactor() {
    MatrixXd B(m_, m_);
    for (Index i = 0; i < m_; ++i) B.col(i) = A_.col(head_[i]);
    Eigen::PartialPivLU<MatrixXd> lu(B);
    binv_ = lu.inverse();
    xb_ = lu.solve(b_);
  }

  VectorXd coefficients() const {
    VectorXd a = VectorXd::Zero(n_);
    for (Index i = 0; i < m_; ++i) a[head_[i]] = xb_[i];
    return a;
  }

  // Dual vector for the current signs; after refactor() it is exact up to roundoff.
  VectorXd dual() const {
    VectorXd s(m_);
    for (Index i = 0; i < m_; ++i) {
      // A basic coefficient that is clearly nonzero must carry its own sign.
      s[i] = std::abs(xb_[i]) > 1e-12 ? (xb_[i] > 0.0 ? 1.0 : -1.0) : sgn_[i];
    }
    return binv_.transpose() * s;
  }

  int iterations() const { return static_cast<int>(iterations_); }
  const std::vector<Index>& basis() const { return head_; }

 private:
  static constexpr double kPivotTol = 1e-11;
  static constexpr Index kRefactorEvery = 50;

  const MatrixXd& A_;
  const VectorXd& b_;
  Index m_, n_;
  std::vector<Index> head_;
  std::vector<Index> pos_;
  std::vector<Index> active_;
  std::vector<char> in_active_;
  MatrixXd binv_;
  MatrixXd act_cols_;
  VectorXd xb_, sgn_, y_, w_, g_;
  Index iterations_ = 0;
  Index cap_ = 0;
  Index bland_after_ = 0;
};

// Starting basis: greedy Gram-Schmidt over the preferred columns, then an
// evenly strided subset, then all columns. A has orthonormal rows, so column
// norms are at most one and an absolute threshold is meaningful.
std::vector<Index> start_columns(const MatrixXd& A, std::span<const Index> preferred) {
  constexpr double kIndependent = 1e-3;
  const Index m = A.rows(), n = A.cols();
  std::vector<Index> out;
  std::vector<char> used(n, 0);
  MatrixXd Q(m, m);
  auto offer = [&](Index j) {
    if (j < 0 || j >= n || used[j]) return;
    used[j] = 1;
    VectorXd v = A.col(j);
    const Index k = static_cast<Index>(out.size());
    for (int pass = 0; pass < 2; ++pass) v -= Q.leftCols(k) * (Q.leftCols(k).transpose() * v);
    const double len = v.norm();
    if (len <= kIndependent) return;
    Q.col(k) = v / len;
    out.push_back(j);
  };
  for (Index j : preferred) {
    if (static_cast<Index>(out.size()) == m) return out;
    offer(j);
  }
  const Index target = std::min(n, 4 * m + 8);
  for (Index k = 0; k < target && static_cast<Index>(out.size()) < m; ++k) offer(k * n / target);
  if (static_cast<Index>(out.size()) == m) return out;
  // Fall back to a column-pivoted QR of everything.
  Eigen::ColPivHouseholderQR<MatrixXd> qr(A);
  const auto& perm = qr.colsPermutation().indices();
  return std::vector<Index>(perm.data(), perm.data() + m);
}

}  // namespace

L1Result l1_minimize(const MatrixXd& V, const VectorXd& p, L1Method method, std::span<const Index> start) {
  if (V.rows() != p.size()) fail(ErrorCode::InvalidArgument, "V and p row counts differ");
  // Keep a maximal independent row set and replace it by near-orthonormal
  // rows with the same solution set, R^-T V_k a = R^-T p_k. This keeps the
  // dual vector O(1).
  const Index n = V.cols();
  MatrixXd A;
  VectorXd b;
  try {
    const RowBasis rb = row_basis(V, p);
    const auto rank = static_cast<Index>(rb.kept.size());
    A.resize(rank, n);
    b.resize(rank);
    for (Index i = 0; i < rank; ++i) {
      A.row(i) = V.row(rb.kept[static_cast<std::size_t>(i)]);
      b[i] = p[rb.kept[static_cast<std::size_t>(i)]];
    }
    const auto Rt = rb.r.transpose().triangularView<Eigen::Lower>();
    Rt.solveInPlace(A);
    Rt.solveInPlace(b);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Inconsistent) fail(ErrorCode::NoPolynomialReproduction, e.what());
    throw;
  }
  const Index m = A.rows();
  if (m > n) fail(ErrorCode::NoPolynomialReproduction, "more independent constraints than unknowns");

  L1Result out;
  out.rank = m;
  VectorXd y;
  if (m == 0) {
    out.a = VectorXd::Zero(n);
    y.resize(0);
  } else if (method == L1Method::LongStep) {
    L1Simplex sx(A, b);
    sx.start(start_columns(A, start));
    sx.solve(1e-10);
    sx.refactor();
    sx.solve(1e-10);
    out.a = sx.coefficients();
    out.basis = sx.basis();
    out.iterations = sx.iterations();
    y = sx.dual();
  } else {
    StandardLP lp;
    lp.A.resize(m, 2 * n);
    lp.A.leftCols(n) = A;
    lp.A.rightCols(n) = -A;
    lp.b = b;
    lp.c = VectorXd::Ones(2 * n);
    const LPSolution sol = solve_standard_form(lp);
    if (sol.status != LPStatus::Optimal) {
      fail(ErrorCode::NoPolynomialReproduction, "l1 program has no feasible point");
    }
    for (Index j = 0; j < n; ++j) {
      if (std::min(sol.x[j], sol.x[n + j]) > 1e-12) {
        fail(ErrorCode::NumericalFailure, "split solution has overlapping positive and negative parts");
      }
    }
    out.a = sol.x.head(n) - sol.x.tail(n);
    out.iterations = sol.iterations;
    y = sol.dual;
  }
  out.norm1 = out.a.lpNorm<1>();

  if (m > 0) {
    const double dual_infeas = (A.transpose() * y).cwiseAbs().maxCoeff() - 1.0;
    const double gap = std::abs(b.dot(y) - out.norm1);
    if (dual_infeas > 1e-9 || gap > 1e-9 * (1.0 + out.norm1)) {
      std::ostringstream os;
      os << "l1 optimality certificate failed: dual infeasibility " << dual_infeas << ", gap " << gap;
      fail(ErrorCode::NumericalFailure, os.str());
    }
  }
  const double resid = (V * out.a - p).cwiseAbs().maxCoeff();
  const double pscale = 1.0 + (p.size() ? p.cwiseAbs().maxCoeff() : 0.0);
  if (resid > 1e-9 * pscale) {
    std::ostringstream os;
    os << "l1 solution violates V a = p by " << resid;
    fail(ErrorCode::NumericalFailure, os.str());
  }
  return out;
}

}  // namespace surfsl

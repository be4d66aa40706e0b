#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace surfsl {

/// minimize c.x subject to A x = b, x >= 0.
struct StandardLP {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
};

enum class LPStatus { Optimal, Infeasible, Unbounded };

struct LPSolution {
  Eigen::VectorXd x;
  double objective = 0.0;
  LPStatus status = LPStatus::Infeasible;
  int iterations = 0;
  /// Dual vector y of the final basis (A^T y <= c at optimality).
  Eigen::VectorXd dual;
  /// Final basic columns; empty if an artificial column stayed basic.
  std::vector<Eigen::Index> basis;
};

struct SimplexOptions {
  double feas_tol = 1e-9;
  double opt_tol = 1e-10;
  double pivot_tol = 1e-9;
  /// Rebuild the explicit basis inverse from scratch this often.
  int refactor_every = 50;
};

struct RowReduction {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  /// Indices of the retained rows of the input, ascending.
  std::vector<Eigen::Index> kept;
};

/// Keeps a maximal numerically independent subset of rows (column-pivoted QR
/// of A^T, pivots below 1e-10 of the largest are dropped). Throws
/// Inconsistent when a dropped row's right-hand side disagrees with the
/// combination of kept rows by more than 1e-8.
RowReduction preprocess_rows(const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

/// Maximal independent row set of A with a triangular factor for it. The
/// pivoted QR runs on an evenly strided column sample; the implied row
/// dependencies are then verified on every column, falling back to the full
/// factorization when they do not hold. `r` is scaled so that r^-T A_kept has
/// rows of roughly unit norm. Throws Inconsistent like preprocess_rows.
struct RowBasis {
  /// Row indices of A in pivot order.
  std::vector<Eigen::Index> kept;
  Eigen::MatrixXd r;
};
RowBasis row_basis(const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

/// Two-phase revised simplex (artificial start; Dantzig pricing switching to
/// Bland's rule after 10(m+n) iterations; lowest-index ratio ties). Rows of A
/// must be linearly independent. Throws MaxIterations after 50(m+n)
/// iterations and NumericalFailure if the final duality check fails.
/// A nonempty `start_basis` (m structural column indices) is tried as a
/// feasible starting basis, skipping phase 1 when it is nonsingular and
/// primal feasible.
LPSolution solve_standard_form(const StandardLP& lp, const SimplexOptions& opts = {},
                               const std::vector<Eigen::Index>& start_basis = {});

struct L1Result {
  Eigen::VectorXd a;
  double norm1 = 0.0;
  int iterations = 0;
  Eigen::Index rank = 0;
  /// Columns of V in the final basis (LongStep only).
  std::vector<Eigen::Index> basis;
};

enum class L1Method {
  /// Simplex on the split system [V, -V] with free-variable breakpoint passing:
  /// a basic coefficient that crosses zero flips sign instead of leaving, as
  /// long as the objective keeps decreasing (one long step replaces a run of
  /// x+/x- exchange pivots).
  LongStep,
  /// solve_standard_form on [V, -V], c = 1, artificial phase 1.
  StandardForm,
};

/// argmin ||a||_1 subject to V a = p via the split a = x+ - x-. Rows are
/// reduced with preprocess_rows and orthonormalized first (same solution set).
/// Both methods end with the duality certificate |V^T y| <= 1 + 1e-9,
/// p.y = ||a||_1. Throws NoPolynomialReproduction when {a : V a = p} is empty.
/// `start` (LongStep only) lists preferred starting columns, e.g. the basis of
/// a nearby problem; independent ones are kept and the rest filled in.
L1Result l1_minimize(const Eigen::MatrixXd& V, const Eigen::VectorXd& p, L1Method method = L1Method::LongStep,
                     std::span<const Eigen::Index> start = {});

}  // namespace surfsl

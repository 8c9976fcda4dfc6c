#pragma once

// Dense convex QP
//
//   min  1/2 d^T H d + g^T d
//   s.t. A_eq d = b_eq,   lo <= A_ineq d <= hi
//
// solved by the dual active-set method of Goldfarb and Idnani. H must be
// symmetric positive definite. The factor J = L^{-T} (H = L L^T) and the
// triangular factor R of the active constraint normals are updated with Givens
// rotations as constraints enter or leave the working set.
//
// Multiplier convention: H d + g + A_eq^T lambda + A_ineq^T mu = 0 at the
// solution, with mu_i >= 0 when row i sits at its upper bound and mu_i <= 0 at
// its lower bound.

#include <Eigen/Dense>
#include <span>
#include <string_view>
#include <vector>

namespace socse {

struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd A_ineq;
  Eigen::VectorXd lo;  ///< may contain -inf
  Eigen::VectorXd hi;  ///< may contain +inf
};

enum class QpStatus { kOptimal, kInfeasible, kNotConvex, kCycling };

std::string_view to_string(QpStatus s);

/// Per inequality row: 0 inactive, -1 at its lower bound, +1 at its upper bound.
using ActiveSet = std::vector<int>;

struct QpSolution {
  QpStatus status = QpStatus::kInfeasible;
  Eigen::VectorXd d;
  Eigen::VectorXd lambda_eq;
  Eigen::VectorXd mu_ineq;
  ActiveSet active;
  int iterations = 0;
  double objective = 0.0;
};

struct QpOptions {
  int max_iterations = 0;          ///< 0: 20 * (n + number of rows) + 100
  double feasibility_tol = 1e-10;  ///< relative violation accepted as satisfied
};

/// Rows listed in `warm` (non-zero entries, same indexing as the result's
/// active set) are preferred when the method picks the next violated
/// constraint, which reproduces a previous working set in few iterations.
QpSolution qp_active_set(const QpProblem& qp, const ActiveSet& warm = {},
                         const QpOptions& opts = {});

/// Largest violation of the equality and inequality rows at d.
double qp_max_violation(const QpProblem& qp, const Eigen::VectorXd& d);

}  // namespace socse

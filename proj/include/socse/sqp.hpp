#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string_view>

#include "socse/nlp.hpp"
#include "socse/qp.hpp"

namespace socse {

enum class HessianInit {
  kIdentity,  ///< B_0 = I
  kObjective, ///< B_0 = finite-difference Hessian of the objective, eigenvalues floored
};

struct SqpOptions {
  int max_iters = 200;
  double eq_tol = 1e-8;        ///< max |c|, linear and nonlinear inequality violation
  double kkt_tol = 1e-6;       ///< stationarity and complementarity
  double penalty_factor = 2.0; ///< merit penalty is raised to this multiple of max |multiplier|
  bool bfgs_reset = true;      ///< reset to scaled identity when damped curvature fails
  HessianInit hessian_init = HessianInit::kObjective;
  double fd_step = 1e-6;
  double backtrack = 0.5;
  double armijo = 1e-4;
  int max_backtracks = 30;
  bool second_order_correction = true;
  /// After a rejected full step, backtrack along z + a d + a^2 (d_soc - d)
  /// instead of the straight line.
  bool curvilinear_search = true;
  double elastic_weight = 1e4; ///< l1 weight on equality slacks when the QP is infeasible
  /// After this many consecutive steps with alpha < short_step, B is replaced by
  /// the finite-difference Lagrangian Hessian with eigenvalue magnitudes floored.
  /// The window doubles whenever a refresh is followed by another short step.
  /// 0 keeps pure damped BFGS.
  int stall_refresh = 1;
  double short_step = 0.1;
  /// B is also rebuilt when its condition number exceeds this; 0 disables the check.
  double max_condition = 1e8;
  std::ostream* log = nullptr; ///< one line per iteration when set

  /// Throws ConfigError on non-positive tolerances or a backtracking factor outside (0, 1).
  void validate() const;
};

enum class SolveStatus { kConverged, kMaxIters, kQpFailure, kLineSearchFailure };

std::string_view to_string(SolveStatus s);

struct SolveReport {
  SolveStatus status = SolveStatus::kMaxIters;
  int iterations = 0;
  int qp_iterations = 0;
  int elastic_steps = 0;
  int bfgs_resets = 0;
  int hessian_refreshes = 0;
  double objective = 0.0;
  double max_eq_residual = 0.0;
  double max_ineq_violation = 0.0;
  double stationarity = 0.0;
  double complementarity = 0.0;
  double wall_time_s = 0.0;
};

struct Multipliers {
  Eigen::VectorXd eq;       ///< n_eq
  Eigen::VectorXd linear;   ///< rows of A_ineq, >= 0 at upper bound, <= 0 at lower bound
  Eigen::VectorXd nonlinear;///< n_nl_ineq, >= 0
};

struct SqpResult {
  Eigen::VectorXd z;
  Multipliers multipliers;
  SolveReport report;
};

/// Line-search SQP with damped BFGS and an l1 exact-penalty merit function.
/// Each step solves the QP built from the linearised equalities, the
/// linearised nonlinear inequalities and the linear inequality rows.
SqpResult solve_sqp(const NlpProblem& nlp, const Eigen::VectorXd& z0,
                    const SqpOptions& opts = {});

struct KktResiduals {
  double stationarity = 0.0;     ///< |grad f + Jc^T lambda + A^T mu + Jg^T nu|_inf
  double complementarity = 0.0;  ///< max |multiplier * slack|
  double feasibility = 0.0;      ///< max equality residual / inequality violation
  double dual_infeasibility = 0.0;  ///< wrong-sign multiplier magnitude
};

/// Recomputes the KKT residuals of (z, multipliers) from the problem callbacks,
/// independently of the solver loop.
KktResiduals kkt_certificate(const NlpProblem& nlp, const Eigen::VectorXd& z,
                             const Multipliers& m, double fd_step = 1e-6);

}  // namespace socse

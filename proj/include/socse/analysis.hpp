#pragma once

// Metrics and oracles for comparing transcriptions: the fine-grid reference,
// ODE rollout, dense constraint scans and the benchmark table.

#include <Eigen/Dense>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "socse/ocp.hpp"
#include "socse/sqp.hpp"
#include "socse/trajectory.hpp"
#include "socse/transcription.hpp"

namespace socse {

struct ReferenceOptions {
  int steps = 1000;           ///< control intervals, >= 1000
  int substeps = 2;           ///< RK4 steps per interval
  double gradient_tol = 1e-9; ///< projected gradient, per unit time
  int max_iters = 20000;      ///< inner projected-gradient iterations per outer pass
  double constraint_tol = 1e-8;
  double penalty = 1e2;       ///< initial augmented-Lagrangian weight for state bounds
  int max_outer = 30;
};

struct ReferenceSolution {
  std::shared_ptr<const ShootingSolution> trajectory;
  double cost = 0.0;               ///< integrated along the trajectory (cost state + terminal)
  double state_violation = 0.0;    ///< max node violation of the state box
  double projected_gradient = 0.0; ///< final inner stationarity measure
  int iterations = 0;
  bool converged = false;
};

/// Piecewise-constant control on K equal intervals, RK4 propagation, solved in
/// condensed (single-shooting) form with exact adjoint gradients and a
/// spectral projected-gradient method on the control box. State bounds are
/// handled by an augmented Lagrangian on the interval nodes. The stage cost is
/// integrated as an extra RK4 state so the cost converges at the rate of the
/// control discretisation rather than of a rectangle rule.
///
/// Throws DomainError if steps < 1000, NonConvergence if the iteration stalls.
ReferenceSolution quasi_optimal_reference(const OcpProblem& ocp, const ReferenceOptions& opts = {});

/// Integrates x' = f(x, u(t)) from x0 with RK4 of step <= dt, evaluating the
/// trajectory's control at the stage times, and returns the largest infinity-norm
/// gap to the trajectory's own states on that grid. Steps are aligned to the
/// trajectory breakpoints. Throws DomainError if dt is not in (0, 1e-3].
double ode_rollout_error(const Trajectory& traj, const OcpProblem& ocp, double dt = 1e-4);

struct ViolationScan {
  Vec x;  ///< per state channel
  Vec u;  ///< per control channel
  double max() const;
};

/// Box violations on `samples` uniformly spaced times including both ends.
/// Throws DomainError if samples < 1000.
ViolationScan dense_violation_scan(const Trajectory& traj, const OcpProblem& ocp, int samples = 10000);

/// int l(x(t), u(t)) dt + phi(x(tf)) by composite Gauss-Legendre quadrature
/// (8 points per panel), with panel edges on every breakpoint and at least
/// `min_panels` panels over the horizon.
double integrate_cost(const Trajectory& traj, const OcpProblem& ocp, int min_panels = 512);

/// max over `samples` uniform times of |u(t) - u_ref(t)|_inf.
double control_deviation(const Trajectory& traj, const Trajectory& ref, int samples = 10000);

struct MethodSpec {
  enum class Kind { kShooting, kCollocation };
  std::string label;
  Kind kind = Kind::kCollocation;
  CollocationConfig collocation;
  ShootingConfig shooting;
};

/// Parses "MS-<K>", "SOCSE-O<M>", "SOC-O<M>" and "PS-O<M>", with optional
/// "-N<nodes>" and "-S<segments>" suffixes on collocation labels.
/// Throws ConfigError on anything else.
MethodSpec parse_method(const std::string& label, int shooting_substeps = 1);

struct MethodResult {
  MethodSpec spec;
  SqpResult sqp;
  std::shared_ptr<const Trajectory> trajectory;
  std::optional<SplineSolution> spline;  ///< collocation methods only
  double solve_time_s = 0.0;             ///< transcription + SQP
};

/// Cold start z = 0 unless z0 is given.
MethodResult solve_method(const OcpProblem& ocp, const MethodSpec& spec, const SqpOptions& opts,
                          const Eigen::VectorXd* z0 = nullptr);

struct BenchmarkRow {
  std::string method;
  double solve_time_s = 0.0;
  double cost_dev_pct = 0.0;
  double ode_err = 0.0;
  double max_violation = 0.0;
  double ctrl_dev = 0.0;
  std::string status;  ///< SolveStatus name, or "error"
  std::string error;   ///< exception text when the row failed
  double cost = 0.0;   ///< integrated cost of the method's trajectory
};

struct BenchmarkConfig {
  std::string problem;
  std::vector<std::string> methods;
  SqpOptions sqp;
  ReferenceOptions reference;
  int samples = 10000;
  double rollout_dt = 1e-4;
  int shooting_substeps = 1;
};

struct BenchmarkTable {
  std::vector<BenchmarkRow> rows;
  double reference_cost = 0.0;
  bool reference_converged = false;
};

/// Solves the reference once, then each method in order. A failing row keeps
/// its error text and the run continues. No methods: empty table, no reference.
BenchmarkTable run_benchmark(const OcpProblem& ocp, const BenchmarkConfig& cfg);

/// Same, with a precomputed reference.
BenchmarkTable run_benchmark(const OcpProblem& ocp, const BenchmarkConfig& cfg,
                             const ReferenceSolution& ref);

/// Columns: method, solve_time_s, cost_dev_pct, ode_err, max_violation, ctrl_dev.
void write_csv(const BenchmarkTable& table, std::ostream& os);

}  // namespace socse

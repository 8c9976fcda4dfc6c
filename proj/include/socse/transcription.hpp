#pragma once

// Transcription of an OcpProblem into a dense NLP.
//
// Collocation modes share one variable layout: per segment, the state
// coefficients alpha_x ((M+1) x n_x) followed by the control coefficients
// alpha_u ((M+1) x n_u), each stored column-major so channel c occupies a
// contiguous run of M+1 entries. They differ only in the linear inequality rows:
//   kSocse           envelope rows C alpha in [lower, upper]  ((M+1)(n_x+n_u) per segment)
//   kSoc             spline values at the N collocation nodes ( N (n_x+n_u) per segment)
//   kPseudospectral  kSoc with N = M + 1, so the spline is the Lagrange interpolant of its nodes

#include <Eigen/Dense>
#include <string>
#include <string_view>

#include "socse/nlp.hpp"
#include "socse/ocp.hpp"
#include "socse/trajectory.hpp"

namespace socse {

enum class CollocationMode { kSocse, kSoc, kPseudospectral };

std::string_view to_string(CollocationMode m);

struct CollocationConfig {
  int degree = 5;   ///< spline degree M
  int nodes = 0;    ///< collocation nodes N; 0 picks N = M (M + 1 for pseudospectral)
  CollocationMode mode = CollocationMode::kSocse;
  int segments = 1; ///< equal-length segments joined with C0 state continuity

  int resolved_nodes() const;
};

/// Throws DofViolation unless (n_u + n_x)(M+1) >= n_x(N+1). Also rejects
/// degrees outside [1, kMaxDegree], N < 2 and segments < 1 (DomainError).
void check_collocation(const OcpProblem& ocp, const CollocationConfig& cfg);

NlpProblem transcribe_socse(const OcpProblem& ocp, const CollocationConfig& cfg);
NlpProblem transcribe_soc(const OcpProblem& ocp, const CollocationConfig& cfg);
/// Dispatches on cfg.mode.
NlpProblem transcribe_collocation(const OcpProblem& ocp, const CollocationConfig& cfg);

struct ShootingConfig {
  int steps = 50;    ///< K control intervals
  int substeps = 1;  ///< RK4 steps per interval
};

/// Variables: block "x" (n_x x (K+1)) then "u" (n_u x K), one column per node.
/// Equalities: x_0 = x0 and x_{k+1} = RK4(x_k, u_k). Box rows for finite bounds only.
NlpProblem transcribe_multiple_shooting(const OcpProblem& ocp, const ShootingConfig& cfg);

/// Name of a collocation block ("alpha_x", "alpha_u" for segment 0, "alpha_x[s]" after).
std::string collocation_block(std::string_view base, int segment);

/// Unpacks z, attaches envelope bounds and the objective evaluated at z.
/// Throws LayoutMismatch when z does not match the configuration.
SplineSolution decode(const Eigen::VectorXd& z, const OcpProblem& ocp,
                      const CollocationConfig& cfg);

/// Inverse of decode for the coefficient blocks.
Eigen::VectorXd encode(const SplineSolution& sol, const CollocationConfig& cfg);

ShootingSolution decode_shooting(const Eigen::VectorXd& z, const OcpProblem& ocp,
                                 const ShootingConfig& cfg);

/// Max over nodes and channels of |alpha_x^T L v'(tau_i) - h f(x(tau_i), u(tau_i))|.
double collocation_residual(const SplineSolution& sol, const OcpProblem& ocp);

/// RK4 over one interval split into `substeps` steps, with the sensitivities
/// d x_next / d x and d x_next / d u accumulated by the chain rule.
struct Rk4Sensitivity {
  Vec x_next;
  Mat dx;
  Mat du;
};
Rk4Sensitivity rk4_sensitivity(const OcpProblem& ocp, const Vec& x, const Vec& u, double dt,
                               int substeps);

}  // namespace socse

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

namespace socse {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct DynamicsJacobians {
  Mat dfdx;  ///< n_x x n_x
  Mat dfdu;  ///< n_x x n_u
};

struct StageCostGradient {
  Vec dx;
  Vec du;
};

/// Continuous-time Bolza problem
///   min  phi(x(tf)) + int_{t0}^{tf} l(x, u) dt
///   s.t. x' = f(x, u),  x_lower <= x <= x_upper,  u_lower <= u <= u_upper,
///        g_f(x(tf)) <= 0,  x(t0) = x0.
/// Path constraints are componentwise boxes. Optional derivative callbacks
/// fall back to central finite differences when empty.
struct OcpProblem {
  std::string name;
  int nx = 0;
  int nu = 0;

  std::function<Vec(const Vec&, const Vec&)> dynamics;
  std::function<DynamicsJacobians(const Vec&, const Vec&)> dynamics_jacobians;

  std::function<double(const Vec&, const Vec&)> stage_cost;
  std::function<StageCostGradient(const Vec&, const Vec&)> stage_cost_gradient;

  std::function<double(const Vec&)> terminal_cost;
  std::function<Vec(const Vec&)> terminal_cost_gradient;

  int n_terminal = 0;
  std::function<Vec(const Vec&)> terminal_constraint;
  std::function<Mat(const Vec&)> terminal_constraint_jacobian;

  Vec x_lower, x_upper;
  Vec u_lower, u_upper;
  Vec x0;
  double t0 = 0.0;
  double tf = 1.0;

  /// Throws DimensionMismatch / DomainError when the invariants do not hold.
  void validate() const;

  DynamicsJacobians jacobians(const Vec& x, const Vec& u) const;
  StageCostGradient cost_gradient(const Vec& x, const Vec& u) const;
  double terminal(const Vec& x) const;
  Vec terminal_gradient(const Vec& x) const;
  Vec terminal_g(const Vec& x) const;
  Mat terminal_g_jacobian(const Vec& x) const;
};

/// Box violation magnitude of a value against [lo, hi] (0 when inside or bounds infinite).
inline double box_violation(double v, double lo, double hi) {
  if (v < lo) return lo - v;
  if (v > hi) return v - hi;
  return 0.0;
}

}  // namespace socse

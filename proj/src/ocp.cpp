#include "socse/ocp.hpp"

#include <string>

#include "socse/errors.hpp"
#include "socse/fd.hpp"

namespace socse {

namespace {

void check_size(const Vec& v, int n, const char* what) {
  if (v.size() != n) {
    throw DimensionMismatch(std::string(what) + " has size " + std::to_string(v.size()) +
                            ", expected " + std::to_string(n));
  }
}

}  // namespace

void OcpProblem::validate() const {
  if (nx <= 0 || nu < 0) throw DimensionMismatch("OcpProblem: bad dimensions");
  if (!dynamics || !stage_cost) throw DomainError("OcpProblem: dynamics and stage cost required");
  check_size(x_lower, nx, "x_lower");
  check_size(x_upper, nx, "x_upper");
  check_size(u_lower, nu, "u_lower");
  check_size(u_upper, nu, "u_upper");
  check_size(x0, nx, "x0");
  if (!(tf > t0)) throw DomainError("OcpProblem: tf must exceed t0");
  for (int i = 0; i < nx; ++i) {
    if (!(x_lower[i] <= x_upper[i])) throw DomainError("OcpProblem: x_lower > x_upper");
    if (x0[i] < x_lower[i] || x0[i] > x_upper[i]) {
      throw DomainError("OcpProblem: x0[" + std::to_string(i) + "] outside the state box");
    }
  }
  for (int i = 0; i < nu; ++i) {
    if (!(u_lower[i] <= u_upper[i])) throw DomainError("OcpProblem: u_lower > u_upper");
  }
  if (n_terminal > 0 && !terminal_constraint) {
    throw DomainError("OcpProblem: n_terminal > 0 without a terminal constraint");
  }
}

DynamicsJacobians OcpProblem::jacobians(const Vec& x, const Vec& u) const {
  if (dynamics_jacobians) return dynamics_jacobians(x, u);
  DynamicsJacobians J;
  J.dfdx = fd_jacobian([&](const Vec& xx) { return dynamics(xx, u); }, x);
  J.dfdu = fd_jacobian([&](const Vec& uu) { return dynamics(x, uu); }, u);
  if (nu == 0) J.dfdu = Mat::Zero(nx, 0);
  return J;
}

StageCostGradient OcpProblem::cost_gradient(const Vec& x, const Vec& u) const {
  if (stage_cost_gradient) return stage_cost_gradient(x, u);
  return {fd_gradient([&](const Vec& xx) { return stage_cost(xx, u); }, x),
          fd_gradient([&](const Vec& uu) { return stage_cost(x, uu); }, u)};
}

double OcpProblem::terminal(const Vec& x) const { return terminal_cost ? terminal_cost(x) : 0.0; }

Vec OcpProblem::terminal_gradient(const Vec& x) const {
  if (!terminal_cost) return Vec::Zero(nx);
  if (terminal_cost_gradient) return terminal_cost_gradient(x);
  return fd_gradient(terminal_cost, x);
}

Vec OcpProblem::terminal_g(const Vec& x) const {
  if (n_terminal == 0) return Vec(0);
  return terminal_constraint(x);
}

Mat OcpProblem::terminal_g_jacobian(const Vec& x) const {
  if (n_terminal == 0) return Mat(0, nx);
  if (terminal_constraint_jacobian) return terminal_constraint_jacobian(x);
  return fd_jacobian(terminal_constraint, x);
}

}  // namespace socse

#include "socse/academic.hpp"

namespace socse {

OcpProblem academic_problem() {
  OcpProblem p;
  p.name = "academic";
  p.nx = 1;
  p.nu = 1;
  p.dynamics = [](const Vec& x, const Vec& u) {
    Vec dx(1);
    dx[0] = -x[0] + u[0];
    return dx;
  };
  p.dynamics_jacobians = [](const Vec&, const Vec&) {
    return DynamicsJacobians{Mat::Constant(1, 1, -1.0), Mat::Constant(1, 1, 1.0)};
  };
  p.stage_cost = [](const Vec& x, const Vec& u) { return 0.5 * (x[0] * x[0] + u[0] * u[0]); };
  p.stage_cost_gradient = [](const Vec& x, const Vec& u) { return StageCostGradient{x, u}; };
  p.x_lower = Vec::Constant(1, 0.2);
  p.x_upper = Vec::Constant(1, 1.0);
  p.u_lower = Vec::Constant(1, -0.3);
  p.u_upper = Vec::Constant(1, -0.1);
  p.x0 = Vec::Constant(1, 1.0);
  p.t0 = 0.0;
  p.tf = 1.0;
  return p;
}

}  // namespace socse

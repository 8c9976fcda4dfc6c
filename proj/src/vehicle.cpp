#include "socse/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "socse/errors.hpp"

namespace socse {

namespace {

constexpr int kNz = static_cast<int>(avp::kNx) + static_cast<int>(avp::kNu);

using Row = Eigen::Matrix<double, 1, kNz>;

constexpr int kU0 = kNz - avp::kNu + avp::kTrRate;
constexpr int kU1 = kNz - avp::kNu + avp::kDeltaRate;

Row unit(int i) {
  Row e = Row::Zero();
  e[i] = 1.0;
  return e;
}

void check_sizes(const Vec& x, const Vec& u) {
  if (x.size() != avp::kNx || u.size() != avp::kNu) {
    throw DimensionMismatch("vehicle model expects 10 states and 2 inputs");
  }
}

// Tyre and drivetrain quantities with their gradients w.r.t. [x; u].
struct Forces {
  double fxf, fxr, fyf, fyr, fres;
  Row dfxf, dfxr, dfyf, dfyr, dfres;
};

Forces forces(const Vec& x, const VehicleParams& p) {
  const double vx = x[avp::kVx], vy = x[avp::kVy], r = x[avp::kYawRate];
  const double delta = x[avp::kDelta], tr = x[avp::kTr];
  Forces f;

  const double q = std::sqrt(vx * vx + p.slip_speed_floor * p.slip_speed_floor);
  const Row dq = (vx / q) * unit(avp::kVx);

  const double num_f = vy + p.lf * r;
  const double eta_f = num_f / q;
  const Row deta_f = (unit(avp::kVy) + p.lf * unit(avp::kYawRate)) / q - (num_f / (q * q)) * dq;
  const double alpha_f = delta - std::atan(eta_f);
  const Row dalpha_f = unit(avp::kDelta) - deta_f / (1.0 + eta_f * eta_f);

  const double num_r = vy - p.lr * r;
  const double eta_r = num_r / q;
  const Row deta_r = (unit(avp::kVy) - p.lr * unit(avp::kYawRate)) / q - (num_r / (q * q)) * dq;
  const double alpha_r = -std::atan(eta_r);
  const Row dalpha_r = -deta_r / (1.0 + eta_r * eta_r);

  f.fyf = p.cornering_front * alpha_f;
  f.dfyf = p.cornering_front * dalpha_f;
  f.fyr = p.cornering_rear * alpha_r;
  f.dfyr = p.cornering_rear * dalpha_r;

  f.fxf = tr * p.max_traction * p.front_drive_share;
  f.dfxf = p.max_traction * p.front_drive_share * unit(avp::kTr);
  f.fxr = tr * p.max_traction * (1.0 - p.front_drive_share);
  f.dfxr = p.max_traction * (1.0 - p.front_drive_share) * unit(avp::kTr);

  const double th = std::tanh(vx / p.res_rolling_eps);
  f.fres = p.res_rolling * th + p.res_drag * vx * vx;
  f.dfres = (p.res_rolling * (1.0 - th * th) / p.res_rolling_eps + 2.0 * p.res_drag * vx) *
            unit(avp::kVx);
  return f;
}

// Rows 3..9 are shared by both models: curvilinear kinematics and input rates.
void curvilinear_rows(const Vec& x, const Vec& u, const VehicleParams& p, Vec& dx,
                      Eigen::Matrix<double, avp::kNx, kNz>* jac) {
  const double vx = x[avp::kVx], vy = x[avp::kVy], r = x[avp::kYawRate];
  const double s = x[avp::kS], w = x[avp::kW], th = x[avp::kTheta], thp = x[avp::kThetaP];
  const double kappa = p.curvature(s);
  const double denom = 1.0 - kappa * w;
  if (std::abs(denom) < 1e-9) {
    throw SingularCurvilinear("vehicle at curvature singularity: 1 - kappa*w = " +
                              std::to_string(denom));
  }
  const double c = std::cos(th), sn = std::sin(th);
  const double cp = std::cos(thp), sp = std::sin(thp);
  const double num_s = vx * c - vy * sn;
  const double sdot = num_s / denom;

  dx[avp::kS] = sdot;
  dx[avp::kW] = vx * sn + vy * c;
  dx[avp::kTheta] = r - kappa * sdot;
  dx[avp::kWp] = vx * sp + vy * cp;
  dx[avp::kThetaP] = r;
  dx[avp::kDelta] = u[avp::kDeltaRate];
  dx[avp::kTr] = u[avp::kTrRate];

  if (jac == nullptr) return;
  const double dkappa = p.curvature.derivative(s);
  const Row ddenom = -dkappa * w * unit(avp::kS) - kappa * unit(avp::kW);
  const Row dnum_s = c * unit(avp::kVx) - sn * unit(avp::kVy) + (-vx * sn - vy * c) * unit(avp::kTheta);
  const Row dsdot = dnum_s / denom - (num_s / (denom * denom)) * ddenom;
  jac->row(avp::kS) = dsdot;
  jac->row(avp::kW) = sn * unit(avp::kVx) + c * unit(avp::kVy) + (vx * c - vy * sn) * unit(avp::kTheta);
  jac->row(avp::kTheta) = unit(avp::kYawRate) - dkappa * sdot * unit(avp::kS) - kappa * dsdot;
  jac->row(avp::kWp) = sp * unit(avp::kVx) + cp * unit(avp::kVy) + (vx * cp - vy * sp) * unit(avp::kThetaP);
  jac->row(avp::kThetaP) = unit(avp::kYawRate);
  jac->row(avp::kDelta) = unit(kU1);
  jac->row(avp::kTr) = unit(kU0);
}

using FullJac = Eigen::Matrix<double, avp::kNx, kNz>;

Vec dynamic_impl(const Vec& x, const Vec& u, const VehicleParams& p, FullJac* jac) {
  check_sizes(x, u);
  const Forces f = forces(x, p);
  const double vx = x[avp::kVx], vy = x[avp::kVy], r = x[avp::kYawRate], delta = x[avp::kDelta];
  const double cd = std::cos(delta), sd = std::sin(delta);
  const Row dcd = -sd * unit(avp::kDelta), dsd = cd * unit(avp::kDelta);

  Vec dx(avp::kNx);
  dx[avp::kVx] = (f.fxf * cd + f.fxr - f.fyf * sd - f.fres) / p.mass + r * vy;
  dx[avp::kVy] = (f.fxf * sd + f.fyr + f.fyf * cd) / p.mass - r * vx;
  dx[avp::kYawRate] = (p.lf * (f.fyf * cd + f.fxf * sd) - p.lr * f.fyr) / p.yaw_inertia;
  curvilinear_rows(x, u, p, dx, jac);

  if (jac != nullptr) {
    jac->row(avp::kVx) =
        (f.dfxf * cd + f.fxf * dcd + f.dfxr - f.dfyf * sd - f.fyf * dsd - f.dfres) / p.mass +
        vy * unit(avp::kYawRate) + r * unit(avp::kVy);
    jac->row(avp::kVy) = (f.dfxf * sd + f.fxf * dsd + f.dfyr + f.dfyf * cd + f.fyf * dcd) / p.mass -
                         vx * unit(avp::kYawRate) - r * unit(avp::kVx);
    jac->row(avp::kYawRate) =
        (p.lf * (f.dfyf * cd + f.fyf * dcd + f.dfxf * sd + f.fxf * dsd) - p.lr * f.dfyr) /
        p.yaw_inertia;
  }
  return dx;
}

Vec kinematic_impl(const Vec& x, const Vec& u, const VehicleParams& p, FullJac* jac) {
  check_sizes(x, u);
  const Forces f = forces(x, p);
  const double vx = x[avp::kVx], delta = x[avp::kDelta], ddelta = u[avp::kDeltaRate];
  const double wheelbase = p.lf + p.lr;

  const double ax = (f.fxf + f.fxr - f.fres) / p.mass;
  const double k = ddelta * vx + delta * ax;

  Vec dx(avp::kNx);
  dx[avp::kVx] = ax;
  dx[avp::kVy] = k * p.lr / wheelbase;
  dx[avp::kYawRate] = k / wheelbase;
  curvilinear_rows(x, u, p, dx, jac);

  if (jac != nullptr) {
    const Row dax = (f.dfxf + f.dfxr - f.dfres) / p.mass;
    const Row dk = vx * unit(kU1) + ddelta * unit(avp::kVx) + ax * unit(avp::kDelta) + delta * dax;
    jac->row(avp::kVx) = dax;
    jac->row(avp::kVy) = dk * p.lr / wheelbase;
    jac->row(avp::kYawRate) = dk / wheelbase;
  }
  return dx;
}

}  // namespace

double CurvatureProfile::operator()(double s) const {
  return constant + amplitude * std::sin(2.0 * std::numbers::pi * s / wavelength);
}

double CurvatureProfile::derivative(double s) const {
  const double k = 2.0 * std::numbers::pi / wavelength;
  return amplitude * k * std::cos(k * s);
}

VehicleParams::VehicleParams() {
  Q = Mat::Zero(avp::kNx, avp::kNx);
  Q.diagonal() << 1.0, 0.1, 0.5, 0.0, 2.0, 2.0, 0.0, 0.0, 0.5, 0.1;
  R = Mat::Zero(avp::kNu, avp::kNu);
  R.diagonal() << 0.5, 2.0;
}

void VehicleParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ConfigError(std::string("vehicle parameter ") + name + " must be positive");
  };
  positive(mass, "mass");
  positive(yaw_inertia, "yaw_inertia");
  positive(lf, "lf");
  positive(lr, "lr");
  positive(cornering_front, "cornering_front");
  positive(cornering_rear, "cornering_rear");
  positive(max_traction, "max_traction");
  positive(res_rolling_eps, "res_rolling_eps");
  positive(slip_speed_floor, "slip_speed_floor");
  positive(curvature.wavelength, "curvature.wavelength");
  positive(half_width_left, "half_width_left");
  positive(half_width_right, "half_width_right");
  if (res_rolling < 0.0 || res_drag < 0.0) throw ConfigError("resistance coefficients must be >= 0");
  if (front_drive_share < 0.0 || front_drive_share > 1.0) {
    throw ConfigError("front_drive_share must lie in [0, 1]");
  }
  if (fusion < 0.0 || fusion > 1.0) throw ConfigError("fusion weight lambda must lie in [0, 1]");
  if (fusion_schedule && !(fusion_v_hi > fusion_v_lo)) {
    throw ConfigError("fusion schedule needs v_hi > v_lo");
  }
  if (Q.rows() != avp::kNx || Q.cols() != avp::kNx) throw ConfigError("Q must be 10x10");
  if (R.rows() != avp::kNu || R.cols() != avp::kNu) throw ConfigError("R must be 2x2");
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw ConfigError("Q must be symmetric");
  if ((R - R.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw ConfigError("R must be symmetric");
  const Eigen::SelfAdjointEigenSolver<Mat> eq(Q), er(R);
  if (eq.eigenvalues().minCoeff() < -1e-12) throw ConfigError("Q must be positive semidefinite");
  if (er.eigenvalues().minCoeff() <= 0.0) throw ConfigError("R must be positive definite");
  if (q_wp < 0.0 || q_thetap < 0.0 || parking_sharpness < 0.0) {
    throw ConfigError("parking weights must be >= 0");
  }
}

VehicleParams default_vehicle_params() { return VehicleParams{}; }

AvpScenario default_avp_scenario(const VehicleParams& p) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  AvpScenario sc;
  sc.x0 = Vec::Zero(avp::kNx);
  sc.x0[avp::kVx] = 2.0;
  sc.x0[avp::kW] = 2.99;
  sc.x0[avp::kWp] = 1.0;
  sc.x0[avp::kThetaP] = 0.05;
  sc.t0 = 0.0;
  sc.tf = 2.0;
  sc.x_lower = Vec::Constant(avp::kNx, -inf);
  sc.x_upper = Vec::Constant(avp::kNx, inf);
  sc.x_lower[avp::kVx] = 0.0;
  sc.x_upper[avp::kVx] = 5.0;
  sc.x_lower[avp::kW] = -p.half_width_right;
  sc.x_upper[avp::kW] = p.half_width_left;
  sc.x_lower[avp::kDelta] = -0.5;
  sc.x_upper[avp::kDelta] = 0.5;
  sc.x_lower[avp::kTr] = -1.0;
  sc.x_upper[avp::kTr] = 1.0;
  sc.u_lower = Vec(avp::kNu);
  sc.u_upper = Vec(avp::kNu);
  sc.u_lower << -0.5, -0.2;
  sc.u_upper << 0.5, 0.2;
  return sc;
}

double fusion_weight(double vx, const VehicleParams& p) {
  if (!p.fusion_schedule) return p.fusion;
  return std::clamp((vx - p.fusion_v_lo) / (p.fusion_v_hi - p.fusion_v_lo), 0.0, 1.0);
}

Vec dynamic_model(const Vec& x, const Vec& u, const VehicleParams& p) {
  return dynamic_impl(x, u, p, nullptr);
}

Vec kinematic_model(const Vec& x, const Vec& u, const VehicleParams& p) {
  return kinematic_impl(x, u, p, nullptr);
}

Vec vehicle_dynamics(const Vec& x, const Vec& u, const VehicleParams& p) {
  const double lambda = fusion_weight(x[avp::kVx], p);
  return lambda * dynamic_impl(x, u, p, nullptr) + (1.0 - lambda) * kinematic_impl(x, u, p, nullptr);
}

DynamicsJacobians vehicle_jacobians(const Vec& x, const Vec& u, const VehicleParams& p) {
  FullJac jd = FullJac::Zero(), jk = FullJac::Zero();
  const Vec fd = dynamic_impl(x, u, p, &jd);
  const Vec fk = kinematic_impl(x, u, p, &jk);
  const double lambda = fusion_weight(x[avp::kVx], p);
  FullJac j = lambda * jd + (1.0 - lambda) * jk;
  if (p.fusion_schedule) {
    const double v = x[avp::kVx];
    if (v > p.fusion_v_lo && v < p.fusion_v_hi) {
      j.col(avp::kVx) += (fd - fk) / (p.fusion_v_hi - p.fusion_v_lo);
    }
  }
  return {j.leftCols(avp::kNx), j.rightCols(avp::kNu)};
}

double avp_stage_cost(const Vec& x, const Vec& u, const Vec& x_ref, const VehicleParams& p) {
  const Vec e = x - x_ref;
  const double ds = x[avp::kS] - p.parking_s;
  const double phi = std::exp(-p.parking_sharpness * ds * ds);
  const double wp = x[avp::kWp], thp = x[avp::kThetaP];
  return e.dot(p.Q * e) + u.dot(p.R * u) +
         (1.0 - phi) * (p.q_wp * wp * wp + p.q_thetap * thp * thp);
}

StageCostGradient avp_stage_cost_gradient(const Vec& x, const Vec& u, const Vec& x_ref,
                                          const VehicleParams& p) {
  const Vec e = x - x_ref;
  const double ds = x[avp::kS] - p.parking_s;
  const double phi = std::exp(-p.parking_sharpness * ds * ds);
  const double wp = x[avp::kWp], thp = x[avp::kThetaP];
  const double park = p.q_wp * wp * wp + p.q_thetap * thp * thp;
  StageCostGradient g;
  g.dx = (p.Q + p.Q.transpose()) * e;
  g.dx[avp::kS] += 2.0 * p.parking_sharpness * ds * phi * park;
  g.dx[avp::kWp] += (1.0 - phi) * 2.0 * p.q_wp * wp;
  g.dx[avp::kThetaP] += (1.0 - phi) * 2.0 * p.q_thetap * thp;
  g.du = (p.R + p.R.transpose()) * u;
  return g;
}

Vec avp_reference(const VehicleParams& p) {
  Vec r = Vec::Zero(avp::kNx);
  r[avp::kVx] = p.v_ref;
  return r;
}

CurvilinearError cart_to_curvilinear(double X, double Y, double psi, double Xc, double Yc,
                                     double psi_c) {
  return {(Y - Yc) * std::cos(psi_c) - (X - Xc) * std::sin(psi_c), psi - psi_c};
}

OcpProblem avp_problem(const VehicleParams& p, const AvpScenario& sc) {
  p.validate();
  OcpProblem ocp;
  ocp.name = "avp";
  ocp.nx = avp::kNx;
  ocp.nu = avp::kNu;
  ocp.dynamics = [p](const Vec& x, const Vec& u) { return vehicle_dynamics(x, u, p); };
  ocp.dynamics_jacobians = [p](const Vec& x, const Vec& u) { return vehicle_jacobians(x, u, p); };
  const Vec x_ref = avp_reference(p);
  ocp.stage_cost = [p, x_ref](const Vec& x, const Vec& u) { return avp_stage_cost(x, u, x_ref, p); };
  ocp.stage_cost_gradient = [p, x_ref](const Vec& x, const Vec& u) {
    return avp_stage_cost_gradient(x, u, x_ref, p);
  };
  ocp.x_lower = sc.x_lower;
  ocp.x_upper = sc.x_upper;
  ocp.u_lower = sc.u_lower;
  ocp.u_upper = sc.u_upper;
  ocp.x0 = sc.x0;
  ocp.t0 = sc.t0;
  ocp.tf = sc.tf;
  ocp.validate();
  return ocp;
}

}  // namespace socse

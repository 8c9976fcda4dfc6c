#pragma once

// Single-track vehicle in a road-attached curvilinear frame, for path following
// and parking.
//
// State  x = [v_x, v_y, r, s, w, theta, w_p, theta_p, delta, t_r]
// Input  u = [t_r', delta']
//
// v_x, v_y, r are body-frame velocities and yaw rate; s is the arc length along
// the centreline, w and theta the lateral and heading deviation from it, w_p and
// theta_p the lateral and heading error to the parking spot, delta the steering
// angle and t_r the normalised traction command in [-1, 1].

#include <utility>

#include "socse/ocp.hpp"

namespace socse {

namespace avp {
enum Index : int { kVx = 0, kVy, kYawRate, kS, kW, kTheta, kWp, kThetaP, kDelta, kTr, kNx };
enum Input : int { kTrRate = 0, kDeltaRate, kNu };
}  // namespace avp

/// Centreline curvature kappa(s) = constant + amplitude * sin(2 pi s / wavelength) [1/m].
struct CurvatureProfile {
  double constant = 0.0;
  double amplitude = 0.0;
  double wavelength = 20.0;

  double operator()(double s) const;
  double derivative(double s) const;
};

struct VehicleParams {
  double mass = 1200.0;             ///< kg
  double yaw_inertia = 1500.0;      ///< kg m^2
  double lf = 1.2;                  ///< CoG to front axle, m
  double lr = 1.4;                  ///< CoG to rear axle, m
  double cornering_front = 40000;   ///< N/rad
  double cornering_rear = 45000;    ///< N/rad
  double max_traction = 3600.0;     ///< N at |t_r| = 1
  double front_drive_share = 0.5;   ///< fraction of traction on the front axle
  double res_rolling = 120.0;       ///< c_0, N
  double res_rolling_eps = 0.1;     ///< m/s, smoothing of sign(v_x)
  double res_drag = 0.4;            ///< c_2, N s^2/m^2
  double slip_speed_floor = 0.1;    ///< m/s, v_x <- sqrt(v_x^2 + eps^2) in slip angles

  double fusion = 0.5;              ///< lambda: weight of the dynamic model
  bool fusion_schedule = false;     ///< use lambda(v_x) = clamp((v_x - v_lo)/(v_hi - v_lo))
  double fusion_v_lo = 1.0;         ///< m/s
  double fusion_v_hi = 3.0;         ///< m/s

  CurvatureProfile curvature{0.02, 0.0, 20.0};
  double half_width_left = 3.0;     ///< m, w <= half_width_left
  double half_width_right = 3.0;    ///< m, w >= -half_width_right

  double v_ref = 2.0;               ///< m/s, velocity reference
  double parking_s = 6.0;           ///< s_p, m
  double parking_sharpness = 0.5;   ///< A, 1/m^2
  double q_wp = 1.0;
  double q_thetap = 1.0;
  Mat Q;                            ///< 10x10, PSD
  Mat R;                            ///< 2x2, PD

  VehicleParams();
  /// Throws ConfigError on non-positive physical constants, lambda outside [0, 1],
  /// Q not PSD or R not PD.
  void validate() const;
};

struct AvpScenario {
  Vec x0;
  double t0 = 0.0;
  double tf = 2.0;
  Vec x_lower, x_upper;
  Vec u_lower, u_upper;
};

VehicleParams default_vehicle_params();
/// Vehicle at rest-to-cruise speed, 2.99 m left of the centreline, track limit 3 m.
AvpScenario default_avp_scenario(const VehicleParams& p);

double fusion_weight(double vx, const VehicleParams& p);

/// Dynamic single-track model with linear tyres.
Vec dynamic_model(const Vec& x, const Vec& u, const VehicleParams& p);
/// Kinematic single-track counterpart sharing the curvilinear rows.
Vec kinematic_model(const Vec& x, const Vec& u, const VehicleParams& p);
/// lambda f_dyn + (1 - lambda) f_kin. Throws SingularCurvilinear if |1 - kappa w| < 1e-9.
Vec vehicle_dynamics(const Vec& x, const Vec& u, const VehicleParams& p);
/// Analytic Jacobians of vehicle_dynamics.
DynamicsJacobians vehicle_jacobians(const Vec& x, const Vec& u, const VehicleParams& p);

/// (x - x_ref)^T Q (x - x_ref) + u^T R u + (1 - phi)(Q_wp w_p^2 + Q_thetap theta_p^2),
/// phi = exp(-A (s - s_p)^2).
double avp_stage_cost(const Vec& x, const Vec& u, const Vec& x_ref, const VehicleParams& p);
StageCostGradient avp_stage_cost_gradient(const Vec& x, const Vec& u, const Vec& x_ref,
                                          const VehicleParams& p);

/// Zero for every state except v_x = v_ref.
Vec avp_reference(const VehicleParams& p);

struct CurvilinearError {
  double w;
  double theta;
};

CurvilinearError cart_to_curvilinear(double X, double Y, double psi, double Xc, double Yc,
                                     double psi_c);

OcpProblem avp_problem(const VehicleParams& p, const AvpScenario& sc);

}  // namespace socse

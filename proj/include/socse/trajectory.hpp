#pragma once

// Continuous-time trajectories produced by the transcriptions, evaluated in
// physical time. The analysis module only sees this interface.

#include <Eigen/Dense>
#include <vector>

#include "socse/envelope.hpp"
#include "socse/ocp.hpp"
#include "socse/polynomial.hpp"

namespace socse {

class Trajectory {
 public:
  virtual ~Trajectory() = default;

  virtual int nx() const = 0;
  virtual int nu() const = 0;
  virtual double t0() const = 0;
  virtual double tf() const = 0;
  virtual Vec state(double t) const = 0;
  virtual Vec control(double t) const = 0;
  /// Times where the trajectory or its control may lose smoothness, including t0 and tf.
  virtual std::vector<double> breakpoints() const = 0;
};

struct SplineSegment {
  Mat alpha_x;  ///< (M+1) x n_x
  Mat alpha_u;  ///< (M+1) x n_u
  TimeMap time;
  ChannelBounds x_bounds;
  ChannelBounds u_bounds;
};

/// One or more Legendre-spline segments sharing degree M and grid.
class SplineSolution : public Trajectory {
 public:
  SplineSolution(int degree, SpectralGrid grid, std::vector<SplineSegment> segments,
                 double objective);

  int degree() const { return basis_.degree(); }
  const LegendreBasisMatrix& basis() const { return basis_; }
  const SpectralGrid& grid() const { return grid_; }
  const std::vector<SplineSegment>& segments() const { return segments_; }
  double objective() const { return objective_; }
  void set_objective(double j) { objective_ = j; }

  /// First segment coefficients; the usual single-spline case.
  const Mat& alpha_x() const { return segments_.front().alpha_x; }
  const Mat& alpha_u() const { return segments_.front().alpha_u; }

  /// Envelope bounds merged over all segments.
  ChannelBounds state_envelope() const;
  ChannelBounds control_envelope() const;

  int nx() const override;
  int nu() const override;
  double t0() const override { return segments_.front().time.t0(); }
  double tf() const override { return segments_.back().time.tf(); }
  /// Throws DomainError outside [t0, tf].
  Vec state(double t) const override;
  Vec control(double t) const override;
  /// d x / dt.
  Vec state_rate(double t) const;
  std::vector<double> breakpoints() const override;

 private:
  const SplineSegment& locate(double t, double& tau) const;

  LegendreBasisMatrix basis_;
  SpectralGrid grid_;
  std::vector<SplineSegment> segments_;
  double objective_;
};

/// Multiple-shooting solution: node states, piecewise-constant controls, and
/// RK4 propagation between nodes.
class ShootingSolution : public Trajectory {
 public:
  ShootingSolution(const OcpProblem& ocp, Mat x_nodes, Mat u_steps, int substeps,
                   double objective);

  const Mat& x_nodes() const { return x_; }  ///< n_x x (K+1)
  const Mat& u_steps() const { return u_; }  ///< n_u x K
  int steps() const { return static_cast<int>(u_.cols()); }
  double objective() const { return objective_; }

  int nx() const override { return static_cast<int>(x_.rows()); }
  int nu() const override { return static_cast<int>(u_.rows()); }
  double t0() const override { return t0_; }
  double tf() const override { return tf_; }
  Vec state(double t) const override;
  Vec control(double t) const override;
  std::vector<double> breakpoints() const override;

 private:
  int interval(double t) const;

  OcpProblem ocp_;
  Mat x_;
  Mat u_;
  int substeps_;
  double objective_;
  double t0_;
  double tf_;
};

/// Classic fourth-order Runge-Kutta step of x' = f(x, u) with u held constant.
Vec rk4_step(const OcpProblem& ocp, const Vec& x, const Vec& u, double dt);

}  // namespace socse

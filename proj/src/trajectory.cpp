#include "socse/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "socse/errors.hpp"

namespace socse {

namespace {

constexpr double kTimeSlack = 1e-12;

void check_time(double t, double t0, double tf) {
  const double slack = kTimeSlack * std::max(1.0, std::abs(tf - t0));
  if (t < t0 - slack || t > tf + slack) {
    throw DomainError("time " + std::to_string(t) + " outside [" + std::to_string(t0) + ", " +
                      std::to_string(tf) + "]");
  }
}

ChannelBounds merge(const ChannelBounds& a, const ChannelBounds& b) {
  return {a.lower.cwiseMin(b.lower), a.upper.cwiseMax(b.upper)};
}

}  // namespace

SplineSolution::SplineSolution(int degree, SpectralGrid grid, std::vector<SplineSegment> segments,
                               double objective)
    : basis_(degree), grid_(std::move(grid)), segments_(std::move(segments)), objective_(objective) {
  if (segments_.empty()) throw DimensionMismatch("SplineSolution needs at least one segment");
  for (const auto& s : segments_) {
    if (s.alpha_x.rows() != degree + 1 || s.alpha_u.rows() != degree + 1) {
      throw DimensionMismatch("coefficient rows do not match the spline degree");
    }
  }
}

int SplineSolution::nx() const { return static_cast<int>(segments_.front().alpha_x.cols()); }
int SplineSolution::nu() const { return static_cast<int>(segments_.front().alpha_u.cols()); }

ChannelBounds SplineSolution::state_envelope() const {
  ChannelBounds b = segments_.front().x_bounds;
  for (std::size_t s = 1; s < segments_.size(); ++s) b = merge(b, segments_[s].x_bounds);
  return b;
}

ChannelBounds SplineSolution::control_envelope() const {
  ChannelBounds b = segments_.front().u_bounds;
  for (std::size_t s = 1; s < segments_.size(); ++s) b = merge(b, segments_[s].u_bounds);
  return b;
}

const SplineSegment& SplineSolution::locate(double t, double& tau) const {
  check_time(t, t0(), tf());
  std::size_t k = 0;
  while (k + 1 < segments_.size() && t > segments_[k].time.tf()) ++k;
  const auto& seg = segments_[k];
  tau = std::clamp(seg.time.to_normalized(t), -1.0, 1.0);
  return seg;
}

Vec SplineSolution::state(double t) const {
  double tau = 0.0;
  const auto& seg = locate(t, tau);
  return eval_spline(seg.alpha_x, basis_, tau);
}

Vec SplineSolution::control(double t) const {
  double tau = 0.0;
  const auto& seg = locate(t, tau);
  if (seg.alpha_u.cols() == 0) return Vec(0);
  return eval_spline(seg.alpha_u, basis_, tau);
}

Vec SplineSolution::state_rate(double t) const {
  double tau = 0.0;
  const auto& seg = locate(t, tau);
  return eval_spline_deriv(seg.alpha_x, basis_, tau) / seg.time.scale();
}

std::vector<double> SplineSolution::breakpoints() const {
  std::vector<double> out{t0()};
  for (const auto& s : segments_) out.push_back(s.time.tf());
  return out;
}

ShootingSolution::ShootingSolution(const OcpProblem& ocp, Mat x_nodes, Mat u_steps, int substeps,
                                   double objective)
    : ocp_(ocp),
      x_(std::move(x_nodes)),
      u_(std::move(u_steps)),
      substeps_(substeps),
      objective_(objective),
      t0_(ocp.t0),
      tf_(ocp.tf) {
  if (u_.cols() < 1 || x_.cols() != u_.cols() + 1) {
    throw DimensionMismatch("shooting solution needs K controls and K+1 states");
  }
  if (x_.rows() != ocp.nx || u_.rows() != ocp.nu) {
    throw DimensionMismatch("shooting solution dimensions do not match the problem");
  }
  if (substeps_ < 1) throw DomainError("substeps must be >= 1");
}

int ShootingSolution::interval(double t) const {
  check_time(t, t0_, tf_);
  const int K = steps();
  const double dt = (tf_ - t0_) / K;
  return std::clamp(static_cast<int>(std::floor((t - t0_) / dt)), 0, K - 1);
}

Vec ShootingSolution::state(double t) const {
  const int k = interval(t);
  const double dt = (tf_ - t0_) / steps();
  const double span = std::clamp(t - (t0_ + k * dt), 0.0, dt);
  if (span <= 0.0) return x_.col(k);
  const int n = std::max(1, static_cast<int>(std::ceil(substeps_ * span / dt - 1e-9)));
  Vec x = x_.col(k);
  const Vec u = u_.col(k);
  for (int i = 0; i < n; ++i) x = rk4_step(ocp_, x, u, span / n);
  return x;
}

Vec ShootingSolution::control(double t) const { return u_.col(interval(t)); }

std::vector<double> ShootingSolution::breakpoints() const {
  const int K = steps();
  std::vector<double> out(K + 1);
  for (int k = 0; k <= K; ++k) out[k] = t0_ + (tf_ - t0_) * k / K;
  return out;
}

Vec rk4_step(const OcpProblem& ocp, const Vec& x, const Vec& u, double dt) {
  const Vec k1 = ocp.dynamics(x, u);
  const Vec k2 = ocp.dynamics(x + 0.5 * dt * k1, u);
  const Vec k3 = ocp.dynamics(x + 0.5 * dt * k2, u);
  const Vec k4 = ocp.dynamics(x + dt * k3, u);
  return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace socse

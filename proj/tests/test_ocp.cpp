#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "socse/academic.hpp"
#include "socse/errors.hpp"
#include "socse/fd.hpp"
#include "socse/vehicle.hpp"

using namespace socse;

namespace {

Vec zeros(int n) { return Vec::Zero(n); }

VehicleParams straight_road() {
  VehicleParams p;
  p.curvature = {0.0, 0.0, 20.0};
  return p;
}

Vec random_state(std::mt19937_64& gen) {
  Vec x(avp::kNx);
  x << oracle::uniform(gen, 0.5, 5.0), oracle::uniform(gen, -0.5, 0.5), oracle::uniform(gen, -0.5, 0.5),
      oracle::uniform(gen, 0.0, 10.0), oracle::uniform(gen, -2.9, 2.9), oracle::uniform(gen, -0.5, 0.5),
      oracle::uniform(gen, -1.0, 1.0), oracle::uniform(gen, -0.5, 0.5), oracle::uniform(gen, -0.5, 0.5),
      oracle::uniform(gen, -1.0, 1.0);
  return x;
}

// Central differences written out here so the check does not share code with fd.cpp.
Mat central_difference(const std::function<Vec(const Vec&)>& f, const Vec& z, double h) {
  const Vec f0 = f(z);
  Mat J(f0.size(), z.size());
  for (int j = 0; j < z.size(); ++j) {
    Vec zp = z, zm = z;
    zp[j] += h;
    zm[j] -= h;
    J.col(j) = (f(zp) - f(zm)) / (2.0 * h);
  }
  return J;
}

double worst_relative(const Mat& a, const Mat& b) {
  double w = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) w = std::max(w, std::abs(a(i, j) - b(i, j)) / std::max(1.0, std::abs(a(i, j))));
  return w;
}

}  // namespace

TEST_CASE("academic problem definition") {
  const OcpProblem p = academic_problem();
  CHECK_NOTHROW(p.validate());
  CHECK(p.nx == 1);
  CHECK(p.nu == 1);
  CHECK(p.dynamics(Vec::Constant(1, 1.0), Vec::Constant(1, -0.3))[0] == doctest::Approx(-1.3));
  CHECK(p.stage_cost(Vec::Constant(1, 1.0), Vec::Constant(1, -0.1)) == doctest::Approx(0.505));
  CHECK(p.u_lower[0] == -0.3);
  CHECK(p.u_upper[0] == -0.1);
  CHECK(p.x_lower[0] == 0.2);
  CHECK(p.x_upper[0] == 1.0);
  CHECK(p.x0[0] == 1.0);
  CHECK(p.t0 == 0.0);
  CHECK(p.tf == 1.0);
  CHECK(p.n_terminal == 0);
  CHECK(p.terminal(Vec::Constant(1, 0.7)) == 0.0);

  const DynamicsJacobians j = p.jacobians(Vec::Constant(1, 0.4), Vec::Constant(1, -0.2));
  CHECK(j.dfdx(0, 0) == doctest::Approx(-1.0));
  CHECK(j.dfdu(0, 0) == doctest::Approx(1.0));
  const StageCostGradient g = p.cost_gradient(Vec::Constant(1, 0.4), Vec::Constant(1, -0.2));
  CHECK(g.dx[0] == doctest::Approx(0.4));
  CHECK(g.du[0] == doctest::Approx(-0.2));
}

TEST_CASE("problem validation") {
  OcpProblem p = academic_problem();
  p.x0[0] = 1.5;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p = academic_problem();
  p.tf = 0.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p = academic_problem();
  p.u_lower[0] = 0.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p = academic_problem();
  p.x_lower = Vec::Zero(2);
  CHECK_THROWS_AS(p.validate(), DimensionMismatch);
}

TEST_CASE("vehicle at rest on a straight road is an equilibrium") {
  const VehicleParams p = straight_road();
  const Vec dx = vehicle_dynamics(zeros(avp::kNx), zeros(avp::kNu), p);
  CHECK(dx.cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("straight-road kinematic rows") {
  const VehicleParams p = straight_road();
  Vec x = zeros(avp::kNx);
  x[avp::kVx] = 5.0;
  Vec dx = vehicle_dynamics(x, zeros(avp::kNu), p);
  CHECK(dx[avp::kS] == doctest::Approx(5.0));
  CHECK(dx[avp::kW] == doctest::Approx(0.0));
  CHECK(dx[avp::kTheta] == doctest::Approx(0.0));

  x = zeros(avp::kNx);
  x[avp::kVx] = 1.0;
  x[avp::kTheta] = std::numbers::pi / 2;
  dx = vehicle_dynamics(x, zeros(avp::kNu), p);
  CHECK(std::abs(dx[avp::kS]) <= 1e-15);
  CHECK(dx[avp::kW] == doctest::Approx(1.0));

  Vec u(avp::kNu);
  u << 0.3, -0.2;
  dx = vehicle_dynamics(zeros(avp::kNx), u, p);
  CHECK(dx[avp::kTr] == 0.3);
  CHECK(dx[avp::kDelta] == -0.2);
}

TEST_CASE("curvature singularity is reported") {
  VehicleParams p;
  p.curvature = {0.5, 0.0, 20.0};
  Vec x = zeros(avp::kNx);
  x[avp::kVx] = 1.0;
  x[avp::kW] = 2.0;
  CHECK_THROWS_AS(vehicle_dynamics(x, zeros(avp::kNu), p), SingularCurvilinear);
}

TEST_CASE("fusion weight blends the two models exactly") {
  std::mt19937_64 gen(21);
  VehicleParams p;
  for (int k = 0; k < 20; ++k) {
    const Vec x = random_state(gen);
    const Vec u = oracle::random_matrix(gen, avp::kNu, 1);
    p.fusion = 1.0;
    CHECK((vehicle_dynamics(x, u, p) - dynamic_model(x, u, p)).cwiseAbs().maxCoeff() == 0.0);
    p.fusion = 0.0;
    CHECK((vehicle_dynamics(x, u, p) - kinematic_model(x, u, p)).cwiseAbs().maxCoeff() == 0.0);
    p.fusion = 0.3;
    const Vec mix = 0.3 * dynamic_model(x, u, p) + 0.7 * kinematic_model(x, u, p);
    CHECK((vehicle_dynamics(x, u, p) - mix).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("fusion schedule") {
  VehicleParams p;
  CHECK(fusion_weight(0.0, p) == p.fusion);
  p.fusion_schedule = true;
  CHECK(fusion_weight(0.5, p) == 0.0);
  CHECK(fusion_weight(2.0, p) == doctest::Approx(0.5));
  CHECK(fusion_weight(4.0, p) == 1.0);
}

TEST_CASE("analytic vehicle Jacobians match central differences") {
  std::mt19937_64 gen(42);
  for (const bool scheduled : {false, true}) {
    VehicleParams p;
    p.curvature = {0.02, 0.01, 15.0};
    p.fusion_schedule = scheduled;
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      const Vec x = random_state(gen);
      const Vec u = oracle::random_matrix(gen, avp::kNu, 1);
      const DynamicsJacobians j = vehicle_jacobians(x, u, p);
      const Mat jx = central_difference([&](const Vec& z) { return vehicle_dynamics(z, u, p); }, x, 1e-6);
      const Mat ju = central_difference([&](const Vec& z) { return vehicle_dynamics(x, z, p); }, u, 1e-6);
      worst = std::max({worst, worst_relative(j.dfdx, jx), worst_relative(j.dfdu, ju)});
    }
    CHECK(worst <= 1e-5);
  }
}

TEST_CASE("AVP stage cost") {
  VehicleParams p;
  const Vec xref = avp_reference(p);
  CHECK(xref[avp::kVx] == p.v_ref);
  CHECK(xref.tail(avp::kNx - 1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(avp_stage_cost(xref, zeros(avp::kNu), xref, p) == 0.0);

  // At s = s_p the parking term vanishes.
  Vec x = xref;
  x[avp::kS] = p.parking_s;
  x[avp::kWp] = 1.7;
  x[avp::kThetaP] = -0.4;
  p.Q = Mat::Zero(avp::kNx, avp::kNx);
  CHECK(avp_stage_cost(x, zeros(avp::kNu), xref, p) == doctest::Approx(0.0));

  p.Q = Mat::Identity(avp::kNx, avp::kNx);
  p.R = Mat::Identity(avp::kNu, avp::kNu);
  x = xref;
  x[avp::kVy] += 1.0;
  Vec u = zeros(avp::kNu);
  u[0] = 1.0;
  CHECK(avp_stage_cost(x, u, xref, p) == doctest::Approx(2.0));

  // Far from the spot the parking term carries its full weight.
  x = xref;
  x[avp::kS] = p.parking_s + 100.0;
  x[avp::kWp] = 2.0;
  p.Q = Mat::Zero(avp::kNx, avp::kNx);
  CHECK(avp_stage_cost(x, zeros(avp::kNu), xref, p) == doctest::Approx(p.q_wp * 4.0));
}

TEST_CASE("AVP stage cost gradient matches finite differences") {
  std::mt19937_64 gen(8);
  const VehicleParams p;
  const Vec xref = avp_reference(p);
  for (int k = 0; k < 20; ++k) {
    const Vec x = random_state(gen);
    const Vec u = oracle::random_matrix(gen, avp::kNu, 1);
    const StageCostGradient g = avp_stage_cost_gradient(x, u, xref, p);
    const auto fx = [&](const Vec& z) { return Vec::Constant(1, avp_stage_cost(z, u, xref, p)); };
    const auto fu = [&](const Vec& z) { return Vec::Constant(1, avp_stage_cost(x, z, xref, p)); };
    CHECK(worst_relative(g.dx.transpose(), central_difference(fx, x, 1e-6)) <= 1e-6);
    CHECK(worst_relative(g.du.transpose(), central_difference(fu, u, 1e-6)) <= 1e-6);
  }
}

TEST_CASE("cartesian to curvilinear conversion") {
  CurvilinearError e = cart_to_curvilinear(1.0, 2.0, 0.3, 1.0, 2.0, 0.3);
  CHECK(e.w == 0.0);
  CHECK(e.theta == 0.0);
  e = cart_to_curvilinear(0.0, 2.99, 0.0, 0.0, 0.0, 0.0);
  CHECK(e.w == doctest::Approx(2.99));
  e = cart_to_curvilinear(1.0, 0.0, 0.0, 0.0, 0.0, std::numbers::pi / 2);
  CHECK(e.w == doctest::Approx(-1.0));
  CHECK(e.theta == doctest::Approx(-std::numbers::pi / 2));
}

TEST_CASE("vehicle parameter validation") {
  VehicleParams p;
  CHECK_NOTHROW(p.validate());
  p.mass = -1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = VehicleParams{};
  p.fusion = 1.5;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = VehicleParams{};
  p.Q(0, 0) = -1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = VehicleParams{};
  p.R(1, 1) = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("default AVP problem") {
  const VehicleParams p;
  const AvpScenario sc = default_avp_scenario(p);
  CHECK(sc.x0[avp::kW] == 2.99);
  const OcpProblem ocp = avp_problem(p, sc);
  CHECK_NOTHROW(ocp.validate());
  CHECK(ocp.nx == 10);
  CHECK(ocp.nu == 2);
  // The track limit is a plain box on the w coordinate.
  CHECK(ocp.x_upper[avp::kW] == p.half_width_left);
  CHECK(ocp.x_lower[avp::kW] == -p.half_width_right);
}

TEST_CASE("finite-difference helpers") {
  std::mt19937_64 gen(2);
  const Mat A = oracle::random_matrix(gen, 3, 4);
  const Vec z = oracle::random_matrix(gen, 4, 1);
  const Mat J = fd_jacobian([&](const Vec& v) -> Vec { return A * v; }, z);
  CHECK((J - A).cwiseAbs().maxCoeff() <= 1e-9);
  const Vec g = fd_gradient([](const Vec& v) { return v[0] * v[0]; }, Vec::Constant(1, 3.0));
  CHECK(std::abs(g[0] - 6.0) <= 1e-6);
  CHECK_THROWS_AS(fd_jacobian([](const Vec& v) { return v; }, z, 0.0), DomainError);
}

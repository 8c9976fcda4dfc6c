#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "socse/academic.hpp"
#include "socse/analysis.hpp"
#include "socse/errors.hpp"
#include "socse/vehicle.hpp"

using namespace socse;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct PmpSolution {
  double cost = 0.0;
  double min_state = 0.0;
};

// Pontryagin shooting for the academic problem without the state box:
// u = clip(-p, u_lo, u_hi), x' = -x + u, p' = -x + p, p(1) = 0. Bisection on
// p(0), RK4 with n steps, cost carried as a third state.
PmpSolution academic_pmp(double u_lo, double u_hi, int n = 20000) {
  auto shoot = [&](double p0, int steps, PmpSolution* out) {
    const double h = 1.0 / steps;
    Eigen::Vector3d s(1.0, p0, 0.0);
    double xmin = 1.0;
    auto f = [&](const Eigen::Vector3d& v) {
      const double u = std::clamp(-v[1], u_lo, u_hi);
      return Eigen::Vector3d(-v[0] + u, -v[0] + v[1], 0.5 * (v[0] * v[0] + u * u));
    };
    for (int k = 0; k < steps; ++k) {
      const Eigen::Vector3d k1 = f(s), k2 = f(s + 0.5 * h * k1), k3 = f(s + 0.5 * h * k2), k4 = f(s + h * k3);
      s += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
      xmin = std::min(xmin, s[0]);
    }
    if (out) *out = {s[2], xmin};
    return s[1];
  };
  double a = -5.0, b = 5.0;
  const double fa = shoot(a, 2000, nullptr);
  for (int i = 0; i < 80; ++i) {
    const double m = 0.5 * (a + b);
    if ((shoot(m, 2000, nullptr) > 0) == (fa > 0)) a = m; else b = m;
  }
  PmpSolution sol;
  shoot(0.5 * (a + b), n, &sol);
  return sol;
}

// Backward RK4 on -P' = 1 - 2P - P^2, P(1) = 0; the LQR cost is P(0) x0^2 / 2.
double riccati_cost(int n = 100000) {
  const double h = 1.0 / n;
  double P = 0.0;
  auto g = [](double p) { return 1.0 - 2.0 * p - p * p; };  // dP/d(-t)
  for (int k = 0; k < n; ++k) {
    const double k1 = g(P), k2 = g(P + 0.5 * h * k1), k3 = g(P + 0.5 * h * k2), k4 = g(P + h * k3);
    P += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return 0.5 * P;
}

OcpProblem open_academic() {
  OcpProblem p = academic_problem();
  p.x_lower[0] = p.u_lower[0] = -kInf;
  p.x_upper[0] = p.u_upper[0] = kInf;
  return p;
}

// x' = u on [0, 1] with a cubic control; the matching quartic state spline
// is the exact antiderivative.
struct Antiderivative {
  OcpProblem ocp;
  SplineSolution spline;
};

Antiderivative integrator_case() {
  const int M = 4;
  const LegendreBasisMatrix basis(M);
  Eigen::MatrixXd ax(M + 1, 1);
  ax << 0.3, -0.8, 0.5, 0.25, -0.4;
  // Monomial coefficients of x(tau), differentiated and mapped back to Legendre form.
  const Eigen::VectorXd mono_x = basis.matrix().transpose() * ax;
  Eigen::VectorXd mono_u = Eigen::VectorXd::Zero(M + 1);
  const TimeMap time(0.0, 1.0);
  for (int k = 1; k <= M; ++k) mono_u[k - 1] = k * mono_x[k] / time.scale();
  const Eigen::MatrixXd au = basis.matrix().transpose().triangularView<Eigen::Upper>().solve(mono_u);

  SplineSegment seg{ax, au, time, {}, {}};
  SplineSolution sol(M, lgl_grid(M), {seg}, 0.0);

  OcpProblem p;
  p.name = "integrator";
  p.nx = 1;
  p.nu = 1;
  p.dynamics = [](const Vec&, const Vec& u) { return u; };
  p.stage_cost = [](const Vec& x, const Vec&) { return 0.5 * x[0] * x[0]; };
  p.x_lower = p.u_lower = Vec::Constant(1, -kInf);
  p.x_upper = p.u_upper = Vec::Constant(1, kInf);
  p.x0 = sol.state(0.0);
  p.tf = 1.0;
  return {p, sol};
}

std::string without_time_column(const std::string& csv) {
  std::istringstream in(csv);
  std::string out;
  for (std::string line; std::getline(in, line);) {
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    out += line.substr(0, a) + line.substr(b) + '\n';
  }
  return out;
}

}  // namespace

TEST_CASE("academic reference matches the Pontryagin solution") {
  const OcpProblem ocp = academic_problem();
  const ReferenceSolution ref = quasi_optimal_reference(ocp);
  REQUIRE(ref.converged);
  const PmpSolution pmp = academic_pmp(-0.3, -0.1);
  REQUIRE(pmp.min_state > 0.2);  // the state box is inactive, so PMP without it is optimal
  CHECK(std::isfinite(ref.cost));
  CHECK(std::abs(ref.cost - pmp.cost) <= 1e-4 * pmp.cost);
  CHECK(ref.state_violation <= 1e-8);
  for (int i = 0; i < 1000; ++i) {
    const double u = ref.trajectory->control(i / 999.0)[0];
    CHECK(u >= -0.3);
    CHECK(u <= -0.1);
  }
}

TEST_CASE("unconstrained reference matches the Riccati cost") {
  const double lqr = riccati_cost();
  CHECK(lqr == doctest::Approx(0.192909).epsilon(1e-5));
  const ReferenceSolution ref = quasi_optimal_reference(open_academic());
  REQUIRE(ref.converged);
  CHECK(std::abs(ref.cost - lqr) <= 1e-4 * lqr);
  CHECK(std::abs(academic_pmp(-kInf, kInf).cost - lqr) <= 1e-9);
}

TEST_CASE("reference cost is grid independent") {
  const OcpProblem ocp = academic_problem();
  ReferenceOptions opts;
  const ReferenceSolution a = quasi_optimal_reference(ocp, opts);
  opts.steps = 2000;
  const ReferenceSolution b = quasi_optimal_reference(ocp, opts);
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  CHECK(std::abs(a.cost - b.cost) <= 1e-6 * std::abs(b.cost));

  opts.steps = 999;
  CHECK_THROWS_AS(quasi_optimal_reference(ocp, opts), DomainError);
}

TEST_CASE("rollout of an exactly representable trajectory") {
  const Antiderivative c = integrator_case();
  CHECK(ode_rollout_error(c.spline, c.ocp, 1e-4) <= 1e-9);
  CHECK(ode_rollout_error(c.spline, c.ocp, 1e-3) <= 1e-9);
  CHECK_THROWS_AS(ode_rollout_error(c.spline, c.ocp, 2e-3), DomainError);
  CHECK_THROWS_AS(ode_rollout_error(c.spline, c.ocp, 0.0), DomainError);

  // A wrong initial state shows up one-for-one in the error.
  OcpProblem shifted = c.ocp;
  shifted.x0[0] += 0.01;
  CHECK(ode_rollout_error(c.spline, shifted, 1e-4) == doctest::Approx(0.01).epsilon(1e-6));
}

TEST_CASE("dense violation scan") {
  Antiderivative c = integrator_case();
  ViolationScan open = dense_violation_scan(c.spline, c.ocp, 1000);
  CHECK(open.max() == 0.0);

  // Brute-force maximum of the spline on the same uniform grid.
  double xmax = -kInf;
  for (int i = 0; i < 5000; ++i) xmax = std::max(xmax, c.spline.state(i / 4999.0)[0]);
  c.ocp.x_upper[0] = xmax - 0.05;
  const ViolationScan v = dense_violation_scan(c.spline, c.ocp, 5000);
  CHECK(v.x[0] == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(v.u[0] == 0.0);
  CHECK(v.max() == v.x[0]);
  CHECK_THROWS_AS(dense_violation_scan(c.spline, c.ocp, 999), DomainError);
}

TEST_CASE("cost integration") {
  const Antiderivative c = integrator_case();
  // Independent composite Simpson on the degree-8 integrand.
  const int n = 20000;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += w * c.ocp.stage_cost(c.spline.state(t), c.spline.control(t));
  }
  s /= 3.0 * n;
  CHECK(std::abs(integrate_cost(c.spline, c.ocp) - s) <= 1e-13);

  OcpProblem with_terminal = c.ocp;
  with_terminal.terminal_cost = [](const Vec& x) { return 2.0 * x[0]; };
  const double xf = c.spline.state(1.0)[0];
  CHECK(integrate_cost(c.spline, with_terminal) == doctest::Approx(s + 2.0 * xf).epsilon(1e-13));
}

TEST_CASE("control deviation is a max norm over time") {
  const Antiderivative c = integrator_case();
  SplineSegment seg = c.spline.segments().front();
  seg.alpha_u(0, 0) += 0.125;  // shifts u(t) by a constant
  const SplineSolution moved(c.spline.degree(), c.spline.grid(), {seg}, 0.0);
  CHECK(control_deviation(moved, c.spline) == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(control_deviation(c.spline, c.spline) == 0.0);
}

TEST_CASE("method labels") {
  MethodSpec m = parse_method("MS-50", 3);
  CHECK(m.kind == MethodSpec::Kind::kShooting);
  CHECK(m.shooting.steps == 50);
  CHECK(m.shooting.substeps == 3);

  m = parse_method("SOCSE-O8");
  CHECK(m.kind == MethodSpec::Kind::kCollocation);
  CHECK(m.collocation.mode == CollocationMode::kSocse);
  CHECK(m.collocation.degree == 8);
  CHECK(m.collocation.resolved_nodes() == 8);

  m = parse_method("SOC-O5-N7");
  CHECK(m.collocation.mode == CollocationMode::kSoc);
  CHECK(m.collocation.nodes == 7);

  m = parse_method("PS-O5");
  CHECK(m.collocation.mode == CollocationMode::kPseudospectral);
  CHECK(m.collocation.resolved_nodes() == 6);

  m = parse_method("SOCSE-O4-N4-S3");
  CHECK(m.collocation.segments == 3);
  CHECK(m.label == "SOCSE-O4-N4-S3");

  for (const char* bad : {"", "FOO", "MS-", "MS-0", "SOCSE-8", "socse-O5", "SOCSE-O5-X2"}) {
    CHECK_THROWS_AS(parse_method(bad), ConfigError);
  }
}

TEST_CASE("academic benchmark table") {
  const OcpProblem ocp = academic_problem();
  BenchmarkConfig cfg;
  cfg.problem = "academic";
  cfg.methods = {"MS-50", "SOC-O5", "SOCSE-O5", "SOCSE-O8", "SOCSE-O3-N8"};
  const ReferenceSolution ref = quasi_optimal_reference(ocp, cfg.reference);
  const BenchmarkTable t = run_benchmark(ocp, cfg, ref);
  REQUIRE(t.rows.size() == 5);
  CHECK(t.reference_converged);
  CHECK(t.reference_cost == ref.cost);

  for (std::size_t i = 0; i < 4; ++i) {
    const BenchmarkRow& r = t.rows[i];
    CHECK(r.method == cfg.methods[i]);
    CHECK(r.status == "converged");
    CHECK(r.cost_dev_pct == doctest::Approx(100.0 * (r.cost - ref.cost) / ref.cost));
  }
  // The bad layout fails on its own row and the run continues.
  CHECK(t.rows[4].status == "error");
  CHECK(t.rows[4].error.find("degrees-of-freedom") != std::string::npos);
  CHECK(std::isnan(t.rows[4].cost_dev_pct));

  // Multiple shooting with 50 intervals lands within 2 % of the reference.
  CHECK(std::abs(t.rows[0].cost_dev_pct) <= 2.0);
  // The degree-8 envelope spline is the most accurate collocation row.
  CHECK(std::abs(t.rows[3].cost_dev_pct) < std::abs(t.rows[1].cost_dev_pct));
  CHECK(std::abs(t.rows[3].cost_dev_pct) < std::abs(t.rows[2].cost_dev_pct));
  // Node-only constraints leak between nodes; envelope constraints do not.
  CHECK(t.rows[1].max_violation > 1e-3);
  CHECK(t.rows[2].max_violation <= 1e-6);
  CHECK(t.rows[3].max_violation <= 1e-6);

  std::ostringstream a, b;
  write_csv(t, a);
  write_csv(run_benchmark(ocp, cfg, ref), b);
  CHECK(without_time_column(a.str()) == without_time_column(b.str()));
  CHECK(a.str().rfind("method,solve_time_s,cost_dev_pct,ode_err,max_violation,ctrl_dev\n", 0) == 0);
}

TEST_CASE("empty method list gives an empty table") {
  BenchmarkConfig cfg;
  const BenchmarkTable t = run_benchmark(academic_problem(), cfg);
  CHECK(t.rows.empty());
  CHECK_FALSE(t.reference_converged);
  std::ostringstream os;
  write_csv(t, os);
  CHECK(os.str() == "method,solve_time_s,cost_dev_pct,ode_err,max_violation,ctrl_dev\n");
}

TEST_CASE("rollout error falls with spline degree on the parking problem") {
  const VehicleParams p;
  const OcpProblem ocp = avp_problem(p, default_avp_scenario(p));
  std::vector<double> err;
  for (int M = 3; M <= 10; ++M) {
    const MethodResult r = solve_method(ocp, parse_method("SOCSE-O" + std::to_string(M)), SqpOptions{});
    REQUIRE(r.sqp.report.status == SolveStatus::kConverged);
    err.push_back(ode_rollout_error(*r.trajectory, ocp, 1e-4));
    MESSAGE("SOCSE-O" << M << " rollout error " << err.back());
  }
  // Trend rather than strict monotonicity: each step of three degrees gains accuracy.
  for (std::size_t i = 3; i < err.size(); ++i) CHECK(err[i] < err[i - 3]);
  CHECK(err.back() < 0.05 * err.front());
}

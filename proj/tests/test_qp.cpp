#include <doctest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "socse/qp.hpp"

using namespace socse;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

QpProblem unconstrained(const Eigen::MatrixXd& H, const Eigen::VectorXd& g) {
  QpProblem qp;
  qp.H = H;
  qp.g = g;
  qp.A_eq = Eigen::MatrixXd::Zero(0, H.rows());
  qp.b_eq = Eigen::VectorXd::Zero(0);
  qp.A_ineq = Eigen::MatrixXd::Zero(0, H.rows());
  qp.lo = qp.hi = Eigen::VectorXd::Zero(0);
  return qp;
}

double kkt_stationarity(const QpProblem& qp, const QpSolution& s) {
  Eigen::VectorXd r = qp.H * s.d + qp.g;
  if (qp.A_eq.rows()) r += qp.A_eq.transpose() * s.lambda_eq;
  if (qp.A_ineq.rows()) r += qp.A_ineq.transpose() * s.mu_ineq;
  return r.cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("unconstrained and single-bound examples") {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
  QpProblem qp = unconstrained(I, -Eigen::Vector3d::UnitX());
  QpSolution s = qp_active_set(qp);
  REQUIRE(s.status == QpStatus::kOptimal);
  CHECK((s.d - Eigen::Vector3d::UnitX()).norm() <= 1e-14);

  qp.g = -2.0 * Eigen::Vector3d::UnitX();
  qp.A_ineq = Eigen::RowVector3d(1, 0, 0);
  qp.lo = Eigen::VectorXd::Constant(1, -kInf);
  qp.hi = Eigen::VectorXd::Constant(1, 1.0);
  s = qp_active_set(qp);
  REQUIRE(s.status == QpStatus::kOptimal);
  CHECK(s.d[0] == doctest::Approx(1.0));
  CHECK(s.mu_ineq[0] == doctest::Approx(1.0));
  CHECK(s.active == ActiveSet{1});
  CHECK(s.objective == doctest::Approx(0.5 - 2.0));

  // The same bound written as a lower bound on -d_1 flips the multiplier sign.
  qp.A_ineq = Eigen::RowVector3d(-1, 0, 0);
  qp.lo = Eigen::VectorXd::Constant(1, -1.0);
  qp.hi = Eigen::VectorXd::Constant(1, kInf);
  s = qp_active_set(qp);
  CHECK(s.d[0] == doctest::Approx(1.0));
  CHECK(s.mu_ineq[0] == doctest::Approx(-1.0));
  CHECK(s.active == ActiveSet{-1});
}

TEST_CASE("equality-constrained example") {
  QpProblem qp = unconstrained(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d::Zero());
  qp.A_eq = Eigen::RowVector2d(1, 1);
  qp.b_eq = Eigen::VectorXd::Constant(1, 2.0);
  const QpSolution s = qp_active_set(qp);
  REQUIRE(s.status == QpStatus::kOptimal);
  CHECK((s.d - Eigen::Vector2d(1, 1)).norm() <= 1e-14);
  CHECK(s.lambda_eq[0] == doctest::Approx(-1.0));
  CHECK(qp_max_violation(qp, s.d) <= 1e-14);
  CHECK(qp_max_violation(qp, Eigen::Vector2d::Zero()) == doctest::Approx(2.0));
}

TEST_CASE("50 random QPs match brute-force active-set enumeration") {
  std::mt19937_64 gen(2024);
  int checked = 0, with_active = 0;
  for (int k = 0; k < 50; ++k) {
    const int n = std::uniform_int_distribution<int>(1, 6)(gen);
    const QpProblem qp = oracle::random_qp(gen, n);
    const auto ref = oracle::brute_force_qp(qp);
    REQUIRE(ref.has_value());
    const QpSolution s = qp_active_set(qp);
    REQUIRE(s.status == QpStatus::kOptimal);
    CHECK((s.d - ref->d).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(std::abs(s.objective - ref->objective) <= 1e-8 * std::max(1.0, std::abs(ref->objective)));
    CHECK(kkt_stationarity(qp, s) <= 1e-9);
    CHECK(qp_max_violation(qp, s.d) <= 1e-9);
    ++checked;
    for (int a : s.active) {
      if (a != 0) {
        ++with_active;
        break;
      }
    }
  }
  CHECK(checked == 50);
  CHECK(with_active >= 25);
}

TEST_CASE("box QPs match a projected-gradient oracle") {
  std::mt19937_64 gen(99);
  for (int k = 0; k < 20; ++k) {
    const int n = std::uniform_int_distribution<int>(2, 10)(gen);
    QpProblem qp = unconstrained(oracle::random_spd(gen, n, 10.0), 2.0 * oracle::random_matrix(gen, n, 1));
    qp.A_ineq = Eigen::MatrixXd::Identity(n, n);
    qp.lo = -0.5 * Eigen::VectorXd::Ones(n) - 0.5 * oracle::random_matrix(gen, n, 1).cwiseAbs();
    qp.hi = 0.5 * Eigen::VectorXd::Ones(n) + 0.5 * oracle::random_matrix(gen, n, 1).cwiseAbs();
    const Eigen::VectorXd d_ref = oracle::projected_gradient_box(qp.H, qp.g, qp.lo, qp.hi, 5000);
    const QpSolution s = qp_active_set(qp);
    REQUIRE(s.status == QpStatus::kOptimal);
    const double f_ref = 0.5 * d_ref.dot(qp.H * d_ref) + qp.g.dot(d_ref);
    CHECK(std::abs(s.objective - f_ref) <= 1e-8);
    CHECK((s.d - d_ref).cwiseAbs().maxCoeff() <= 1e-7);
  }
}

TEST_CASE("infeasible and nonconvex problems are reported") {
  QpProblem qp = unconstrained(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d::Zero());
  qp.A_ineq = Eigen::MatrixXd(2, 2);
  qp.A_ineq << 1, 0, -1, 0;
  qp.lo = Eigen::Vector2d(1.0, 1.0);
  qp.hi = Eigen::Vector2d(kInf, kInf);
  CHECK(qp_active_set(qp).status == QpStatus::kInfeasible);

  QpProblem bad = unconstrained(Eigen::Vector2d(1.0, -1.0).asDiagonal(), Eigen::Vector2d::Zero());
  CHECK(qp_active_set(bad).status == QpStatus::kNotConvex);
  CHECK(to_string(QpStatus::kOptimal) != to_string(QpStatus::kInfeasible));
}

TEST_CASE("warm start reproduces the working set with fewer iterations") {
  std::mt19937_64 gen(31);
  const int n = 8;
  QpProblem qp = unconstrained(oracle::random_spd(gen, n, 5.0), 4.0 * oracle::random_matrix(gen, n, 1));
  qp.A_ineq = Eigen::MatrixXd::Identity(n, n);
  qp.lo = -0.1 * Eigen::VectorXd::Ones(n);
  qp.hi = 0.1 * Eigen::VectorXd::Ones(n);
  const QpSolution cold = qp_active_set(qp);
  REQUIRE(cold.status == QpStatus::kOptimal);
  const QpSolution warm = qp_active_set(qp, cold.active);
  REQUIRE(warm.status == QpStatus::kOptimal);
  CHECK(warm.active == cold.active);
  CHECK((warm.d - cold.d).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(warm.iterations <= cold.iterations);
}

TEST_CASE("identical inputs give identical results") {
  std::mt19937_64 gen(5);
  const QpProblem qp = oracle::random_qp(gen, 5);
  const QpSolution a = qp_active_set(qp);
  const QpSolution b = qp_active_set(qp);
  CHECK(a.d == b.d);
  CHECK(a.mu_ineq == b.mu_ineq);
  CHECK(a.iterations == b.iterations);
}

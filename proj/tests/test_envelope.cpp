#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "socse/envelope.hpp"
#include "socse/errors.hpp"
#include "socse/polynomial.hpp"

using namespace socse;

namespace {

// Bernstein values of a monomial polynomial on [0, 1] computed directly from
// the definition b_j = sum_{k<=j} C(j,k)/C(M,k) a_k with integer binomials.
Eigen::VectorXd bernstein_by_hand(const Eigen::VectorXd& a) {
  const int M = static_cast<int>(a.size()) - 1;
  auto choose = [](int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
  };
  Eigen::VectorXd b = Eigen::VectorXd::Zero(M + 1);
  for (int j = 0; j <= M; ++j)
    for (int k = 0; k <= j; ++k) b[j] += choose(j, k) / choose(M, k) * a[k];
  return b;
}

Eigen::MatrixXd unit_column(int rows, int j, double scale = 1.0) {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(rows, 1);
  e(j, 0) = scale;
  return e;
}

}  // namespace

TEST_CASE("Bernstein matrix examples") {
  Eigen::Matrix2d b1;
  b1 << 1, 0, 1, 1;
  CHECK(bernstein_matrix(1) == b1);
  CHECK(bernstein_matrix(1) * Eigen::Vector2d(0, 1) == Eigen::Vector2d(0, 1));

  const Eigen::MatrixXd b2 = bernstein_matrix(2);
  CHECK((b2 * Eigen::Vector3d(0, 0, 1) - Eigen::Vector3d(0, 0, 1)).norm() <= 1e-15);
  CHECK((b2 * Eigen::Vector3d(0, 1, -1) - Eigen::Vector3d(0, 0.5, 0)).norm() <= 1e-15);

  std::mt19937_64 gen(3);
  for (int M = 0; M <= 10; ++M) {
    const Eigen::VectorXd a = oracle::random_matrix(gen, M + 1, 1);
    const Eigen::VectorXd b = bernstein_matrix(M) * a;
    CHECK((b - bernstein_by_hand(a)).cwiseAbs().maxCoeff() <= 1e-13);
    CHECK(b[0] == doctest::Approx(a[0]));
    CHECK(b[M] == doctest::Approx(a.sum()));
  }
}

TEST_CASE("binomial shift matrix") {
  Eigen::Matrix2d e1;
  e1 << 1, 0, -1, 2;
  CHECK(binomial_shift_matrix(1) == e1);
  for (int M = 0; M <= 10; ++M) {
    const Eigen::MatrixXd E = binomial_shift_matrix(M);
    CHECK(E(0, 0) == 1.0);
    for (int r = 1; r <= M; ++r) CHECK(E(0, r) == 0.0);
    // E^T is upper triangular.
    CHECK(E.transpose().isUpperTriangular());
    for (int m = 0; m <= M; ++m) {
      CHECK(E.row(m).sum() == doctest::Approx(1.0));
      CHECK(E(m, 0) == (m % 2 ? -1.0 : 1.0));
      // Row m evaluated at s equals (2s - 1)^m.
      for (double s : {0.25, 0.6}) {
        double v = 0.0;
        for (int r = 0; r <= M; ++r) v += E(m, r) * std::pow(s, r);
        CHECK(v == doctest::Approx(std::pow(2 * s - 1, m)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("envelope matrix composition") {
  for (int M = 1; M <= 10; ++M) {
    const LegendreBasisMatrix basis(M);
    const EnvelopeMatrices env = envelope_matrix(M, basis);
    CHECK(env.degree == M);
    const Eigen::MatrixXd expect = env.B * env.E.transpose() * basis.matrix().transpose();
    CHECK(env.C == expect);

    const Eigen::VectorXd p0 = env.C * unit_column(M + 1, 0);
    CHECK((p0 - Eigen::VectorXd::Ones(M + 1)).cwiseAbs().maxCoeff() <= 1e-12);

    // Spline tau has Bernstein values evenly spaced from -1 to 1.
    const Eigen::VectorXd p1 = env.C * unit_column(M + 1, 1);
    for (int j = 0; j <= M; ++j) CHECK(p1[j] == doctest::Approx(-1.0 + 2.0 * j / M));
  }
  CHECK_THROWS_AS(envelope_matrix(4, LegendreBasisMatrix(3)), DimensionMismatch);
}

TEST_CASE("spline bounds examples") {
  const int M = 5;
  const LegendreBasisMatrix basis(M);
  const EnvelopeMatrices env = envelope_matrix(M, basis);

  const ChannelBounds z = spline_bounds(Eigen::MatrixXd::Zero(M + 1, 2), env);
  CHECK(z.lower.cwiseAbs().maxCoeff() == 0.0);
  CHECK(z.upper.cwiseAbs().maxCoeff() == 0.0);

  const ChannelBounds c = spline_bounds(unit_column(M + 1, 0, 2.5), env);
  CHECK(c.lower[0] == doctest::Approx(2.5));
  CHECK(c.upper[0] == doctest::Approx(2.5));

  CHECK_THROWS_AS(spline_bounds(Eigen::MatrixXd::Zero(M, 1), env), DimensionMismatch);
}

TEST_CASE("envelope contains random splines and interpolates the endpoints") {
  std::mt19937_64 gen(11);
  const int samples = 2000;
  for (int M = 1; M <= 10; ++M) {
    const LegendreBasisMatrix basis(M);
    const EnvelopeMatrices env = envelope_matrix(M, basis);
    double worst = 0.0, worst_end = 0.0;
    for (int k = 0; k < 200; ++k) {
      const Eigen::MatrixXd alpha = oracle::random_matrix(gen, M + 1, 1);
      const ChannelBounds b = spline_bounds(alpha, env);
      const Eigen::VectorXd p = env.C * alpha;
      for (int i = 0; i < samples; ++i) {
        const double v = eval_spline(alpha, basis, -1.0 + 2.0 * i / (samples - 1))[0];
        worst = std::max({worst, b.lower[0] - v, v - b.upper[0]});
      }
      worst_end = std::max(worst_end, std::abs(p[0] - eval_spline(alpha, basis, -1.0)[0]));
      worst_end = std::max(worst_end, std::abs(p[M] - eval_spline(alpha, basis, 1.0)[0]));
      CHECK(b.lower[0] <= eval_spline(alpha, basis, -1.0)[0] + 1e-12);
      CHECK(b.upper[0] >= eval_spline(alpha, basis, 1.0)[0] - 1e-12);
    }
    CHECK(worst <= 1e-9);
    CHECK(worst_end <= 1e-10);
  }
}

TEST_CASE("affine splines have exact bounds") {
  std::mt19937_64 gen(5);
  const LegendreBasisMatrix basis(1);
  const EnvelopeMatrices env = envelope_matrix(1, basis);
  for (int k = 0; k < 100; ++k) {
    const Eigen::MatrixXd alpha = oracle::random_matrix(gen, 2, 1);
    const double a = eval_spline(alpha, basis, -1.0)[0];
    const double b = eval_spline(alpha, basis, 1.0)[0];
    const ChannelBounds bd = spline_bounds(alpha, env);
    CHECK(std::abs(bd.lower[0] - std::min(a, b)) <= 1e-15);
    CHECK(std::abs(bd.upper[0] - std::max(a, b)) <= 1e-15);
  }
}

TEST_CASE("degree elevation never widens the bounds") {
  std::mt19937_64 gen(13);
  for (int m = 1; m <= 9; ++m) {
    const LegendreBasisMatrix lo_basis(m), hi_basis(m + 1);
    const EnvelopeMatrices lo_env = envelope_matrix(m, lo_basis);
    const EnvelopeMatrices hi_env = envelope_matrix(m + 1, hi_basis);
    for (int k = 0; k < 50; ++k) {
      const Eigen::MatrixXd alpha = oracle::random_matrix(gen, m + 1, 1);
      Eigen::MatrixXd elevated = Eigen::MatrixXd::Zero(m + 2, 1);
      elevated.topRows(m + 1) = alpha;
      const ChannelBounds a = spline_bounds(alpha, lo_env);
      const ChannelBounds b = spline_bounds(elevated, hi_env);
      CHECK(b.lower[0] >= a.lower[0] - 1e-10);
      CHECK(b.upper[0] <= a.upper[0] + 1e-10);
    }
  }
}

TEST_CASE("binomial coefficients") {
  CHECK(binomial(5, 2) == 10.0);
  CHECK(binomial(10, 0) == 1.0);
  CHECK(binomial(10, 10) == 1.0);
  CHECK(binomial(3, 4) == 0.0);
}

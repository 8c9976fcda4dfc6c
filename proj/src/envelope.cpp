#include "socse/envelope.hpp"

#include <cmath>
#include <string>

#include "socse/errors.hpp"

namespace socse {

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return std::round(c);
}

Eigen::MatrixXd bernstein_matrix(int degree) {
  if (degree < 0) throw DomainError("bernstein_matrix: negative degree");
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(degree + 1, degree + 1);
  for (int j = 0; j <= degree; ++j) {
    for (int k = 0; k <= j; ++k) B(j, k) = binomial(j, k) / binomial(degree, k);
  }
  return B;
}

Eigen::MatrixXd binomial_shift_matrix(int degree) {
  if (degree < 0) throw DomainError("binomial_shift_matrix: negative degree");
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(degree + 1, degree + 1);
  for (int m = 0; m <= degree; ++m) {
    for (int r = 0; r <= m; ++r) {
      const double sign = ((m - r) % 2 == 0) ? 1.0 : -1.0;
      E(m, r) = binomial(m, r) * sign * std::ldexp(1.0, r);
    }
  }
  return E;
}

EnvelopeMatrices envelope_matrix(int degree, const LegendreBasisMatrix& basis) {
  if (basis.degree() != degree) {
    throw DimensionMismatch("envelope_matrix: basis degree " + std::to_string(basis.degree()) +
                            " != " + std::to_string(degree));
  }
  EnvelopeMatrices env;
  env.degree = degree;
  env.B = bernstein_matrix(degree);
  env.E = binomial_shift_matrix(degree);
  env.C = env.B * env.E.transpose() * basis.matrix().transpose();
  return env;
}

ChannelBounds spline_bounds(const Eigen::MatrixXd& alpha, const EnvelopeMatrices& env) {
  if (alpha.rows() != env.degree + 1) {
    throw DimensionMismatch("spline_bounds: alpha has " + std::to_string(alpha.rows()) +
                            " rows for envelope degree " + std::to_string(env.degree));
  }
  const Eigen::MatrixXd p = env.C * alpha;
  return {p.colwise().minCoeff().transpose(), p.colwise().maxCoeff().transpose()};
}

}  // namespace socse

#include "socse/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "socse/errors.hpp"

namespace socse {

namespace {

void check_degree(int degree, const char* what) {
  if (degree < 0 || degree > kMaxDegree) {
    throw DomainError(std::string(what) + ": degree " + std::to_string(degree) +
                      " outside [0, " + std::to_string(kMaxDegree) + "]");
  }
}

void check_tau(double tau) {
  if (!(std::abs(tau) <= 1.0 + 1e-12)) {
    throw DomainError("tau = " + std::to_string(tau) + " outside [-1, 1]");
  }
}

// P_n, P_n' at tau by the three-term recurrences.
std::pair<double, double> legendre_pair(int n, double tau) {
  if (n == 0) return {1.0, 0.0};
  double p_prev = 1.0, p = tau;
  double dp_prev = 0.0, dp = 1.0;
  for (int j = 1; j < n; ++j) {
    const double p_next = ((2.0 * j + 1.0) * tau * p - j * p_prev) / (j + 1.0);
    const double dp_next = dp_prev + (2.0 * j + 1.0) * p;
    p_prev = p;
    p = p_next;
    dp_prev = dp;
    dp = dp_next;
  }
  return {p, dp};
}

}  // namespace

MonomialPoly::MonomialPoly(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
  if (coeffs_.empty()) coeffs_.push_back(0.0);
}

int MonomialPoly::degree() const {
  for (int j = static_cast<int>(coeffs_.size()) - 1; j > 0; --j) {
    if (coeffs_[j] != 0.0) return j;
  }
  return 0;
}

double MonomialPoly::operator()(double tau) const {
  double acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * tau + *it;
  return acc;
}

MonomialPoly MonomialPoly::derivative() const {
  if (coeffs_.size() <= 1) return MonomialPoly({0.0});
  std::vector<double> d(coeffs_.size() - 1);
  for (std::size_t j = 1; j < coeffs_.size(); ++j) d[j - 1] = static_cast<double>(j) * coeffs_[j];
  return MonomialPoly(std::move(d));
}

MonomialPoly legendre_coeffs(int k) {
  check_degree(k, "legendre_coeffs");
  std::vector<double> prev{1.0};
  if (k == 0) return MonomialPoly(prev);
  std::vector<double> cur{0.0, 1.0};
  // (j+1) P_{j+1} = (2j+1) tau P_j - j P_{j-1}
  for (int j = 1; j < k; ++j) {
    std::vector<double> next(j + 2, 0.0);
    for (int i = 0; i <= j; ++i) next[i + 1] += (2.0 * j + 1.0) * cur[i];
    for (int i = 0; i < j; ++i) next[i] -= j * prev[i];
    for (double& c : next) c /= (j + 1.0);
    prev = std::move(cur);
    cur = std::move(next);
  }
  return MonomialPoly(std::move(cur));
}

double legendre_value(int k, double tau) { return legendre_pair(k, tau).first; }

double legendre_derivative(int k, double tau) { return legendre_pair(k, tau).second; }

LegendreBasisMatrix::LegendreBasisMatrix(int degree) : degree_(degree) {
  check_degree(degree, "basis_matrix");
  L_ = Eigen::MatrixXd::Zero(degree + 1, degree + 1);
  for (int j = 0; j <= degree; ++j) {
    const MonomialPoly pj = legendre_coeffs(j);
    const auto& c = pj.coeffs();
    for (int k = 0; k <= j; ++k) L_(j, k) = c[k];
  }
}

Eigen::VectorXd LegendreBasisMatrix::basis_values(double tau) const {
  return L_ * monomial_vector(degree_, tau);
}

Eigen::VectorXd LegendreBasisMatrix::basis_derivatives(double tau) const {
  return L_ * monomial_derivative_vector(degree_, tau);
}

LegendreBasisMatrix basis_matrix(int degree) { return LegendreBasisMatrix(degree); }

Eigen::VectorXd monomial_vector(int degree, double tau) {
  Eigen::VectorXd v(degree + 1);
  double p = 1.0;
  for (int k = 0; k <= degree; ++k) {
    v[k] = p;
    p *= tau;
  }
  return v;
}

Eigen::VectorXd monomial_derivative_vector(int degree, double tau) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(degree + 1);
  double p = 1.0;
  for (int k = 1; k <= degree; ++k) {
    v[k] = k * p;
    p *= tau;
  }
  return v;
}

SpectralGrid lgl_grid(int n) {
  if (n < 2) throw DomainError("lgl_grid: need at least 2 nodes, got " + std::to_string(n));
  if (n - 1 > kMaxDegree) throw DomainError("lgl_grid: node count too large");

  const int deg = n - 1;
  SpectralGrid grid;
  grid.n = n;
  grid.nodes.assign(n, 0.0);
  grid.nodes.front() = -1.0;
  grid.nodes.back() = 1.0;

  // Residual tolerance relative to max |P'_deg| = deg(deg+1)/2 on [-1, 1].
  const double ftol = 1e-14 * std::max(1.0, 0.5 * deg * (deg + 1));
  for (int i = 1; i < n - 1; ++i) {
    double tau = -std::cos(std::numbers::pi * i / deg);
    double f = 0.0;
    bool converged = false;
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre_pair(deg, tau);
      f = dp;
      // Legendre ODE: (1 - tau^2) P'' = 2 tau P' - deg(deg+1) P.
      const double ddp = (2.0 * tau * dp - deg * (deg + 1.0) * p) / (1.0 - tau * tau);
      const double step = dp / ddp;
      tau -= step;
      if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(tau))) {
        f = legendre_pair(deg, tau).second;
        converged = std::abs(f) <= ftol;
        break;
      }
    }
    if (!converged) {
      f = legendre_pair(deg, tau).second;
      if (std::abs(f) > ftol) {
        throw NonConvergence("lgl_grid: Newton failed for node " + std::to_string(i) +
                             " of N=" + std::to_string(n));
      }
    }
    grid.nodes[i] = tau;
  }
  // Enforce exact mirror symmetry.
  for (int i = 0; i < n / 2; ++i) {
    const double a = 0.5 * (grid.nodes[n - 1 - i] - grid.nodes[i]);
    grid.nodes[i] = -a;
    grid.nodes[n - 1 - i] = a;
  }
  if (n % 2 == 1) grid.nodes[n / 2] = 0.0;

  grid.weights.assign(n, 0.0);
  const double base = 2.0 / (static_cast<double>(n) * (n - 1));
  for (int i = 0; i < n; ++i) {
    if (i == 0 || i == n - 1) {
      grid.weights[i] = base;
    } else {
      const double p = legendre_value(deg, grid.nodes[i]);
      grid.weights[i] = base / (p * p);
    }
  }
  return grid;
}

TimeMap::TimeMap(double t0, double tf) : t0_(t0), tf_(tf) {
  if (!(tf > t0)) throw DomainError("TimeMap: need tf > t0");
}

Eigen::VectorXd eval_spline(const Eigen::MatrixXd& alpha, const LegendreBasisMatrix& basis,
                            double tau) {
  check_tau(tau);
  if (alpha.rows() != basis.degree() + 1) {
    throw DimensionMismatch("eval_spline: alpha has " + std::to_string(alpha.rows()) +
                            " rows, basis degree " + std::to_string(basis.degree()));
  }
  return alpha.transpose() * basis.basis_values(tau);
}

Eigen::VectorXd eval_spline_deriv(const Eigen::MatrixXd& alpha, const LegendreBasisMatrix& basis,
                                  double tau) {
  check_tau(tau);
  if (alpha.rows() != basis.degree() + 1) {
    throw DimensionMismatch("eval_spline_deriv: alpha has " + std::to_string(alpha.rows()) +
                            " rows, basis degree " + std::to_string(basis.degree()));
  }
  return alpha.transpose() * basis.basis_derivatives(tau);
}

double quadrature(std::span<const double> values, const SpectralGrid& grid) {
  if (values.size() != grid.weights.size()) {
    throw DimensionMismatch("quadrature: " + std::to_string(values.size()) + " values for " +
                            std::to_string(grid.weights.size()) + " nodes");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) acc += grid.weights[i] * values[i];
  return acc;
}

}  // namespace socse

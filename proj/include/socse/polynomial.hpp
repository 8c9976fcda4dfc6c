#pragma once

// Legendre bases, Legendre-Gauss-Lobatto grids and Legendre-spline evaluation.
//
// Orientation convention used throughout the library: a coefficient matrix
// stores one polynomial per ROW and one monomial power per COLUMN, so row j of
// the Legendre basis matrix L holds the coefficients of P_j(tau) in powers
// 1, tau, ..., tau^M. Row j is zero beyond column j. The transposed matrix
// L^T, which maps Legendre coefficients to monomial coefficients, is upper
// triangular.
//
// Coefficients are stored in the monomial basis. This is exact for the small
// integer ratios involved but conditioning degrades beyond degree ~15; the
// operations accept degrees up to kMaxDegree.

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace socse {

inline constexpr int kMaxDegree = 32;

class MonomialPoly {
 public:
  MonomialPoly() : coeffs_(1, 0.0) {}
  explicit MonomialPoly(std::vector<double> coeffs);

  /// Index of the last nonzero coefficient; 0 for the zero polynomial.
  int degree() const;
  const std::vector<double>& coeffs() const { return coeffs_; }
  double operator()(double tau) const;
  MonomialPoly derivative() const;

 private:
  std::vector<double> coeffs_;
};

/// Monomial coefficients of the Legendre polynomial of degree k (Bonnet recurrence).
MonomialPoly legendre_coeffs(int k);

/// Legendre polynomial P_k(tau) and its derivative, by recurrence (no monomial expansion).
double legendre_value(int k, double tau);
double legendre_derivative(int k, double tau);

class LegendreBasisMatrix {
 public:
  explicit LegendreBasisMatrix(int degree);

  int degree() const { return degree_; }
  /// (M+1)x(M+1); row j = monomial coefficients of P_j.
  const Eigen::MatrixXd& matrix() const { return L_; }

  /// Values [P_0(tau), ..., P_M(tau)] = L v(tau).
  Eigen::VectorXd basis_values(double tau) const;
  /// Derivatives [P_0'(tau), ..., P_M'(tau)] = L v'(tau).
  Eigen::VectorXd basis_derivatives(double tau) const;

 private:
  int degree_;
  Eigen::MatrixXd L_;
};

LegendreBasisMatrix basis_matrix(int degree);

/// Monomial vector v(tau) = [1, tau, ..., tau^M].
Eigen::VectorXd monomial_vector(int degree, double tau);
/// Derivative vector v'(tau) = [0, 1, 2 tau, ..., M tau^(M-1)].
Eigen::VectorXd monomial_derivative_vector(int degree, double tau);

struct SpectralGrid {
  int n = 0;
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Legendre-Gauss-Lobatto nodes and weights on [-1, 1].
///
/// The nodes are -1, +1 and the roots of P'_{N-1}, found by Newton iteration
/// from Chebyshev-Gauss-Lobatto guesses. Weights are
///   w_1 = w_N = 2 / (N(N-1)),   w_i = 2 / (N(N-1) P_{N-1}(tau_i)^2).
/// The interior weight carries the square of P_{N-1}; without it the weights
/// do not sum to 2.
///
/// Throws NonConvergence if a root does not converge, DomainError if N < 2.
SpectralGrid lgl_grid(int n);

/// Affine map between tau in [-1, 1] and physical time in [t0, tf].
class TimeMap {
 public:
  TimeMap(double t0, double tf);

  double t0() const { return t0_; }
  double tf() const { return tf_; }
  /// dt/dtau = (tf - t0) / 2.
  double scale() const { return 0.5 * (tf_ - t0_); }
  double to_physical(double tau) const { return scale() * tau + 0.5 * (tf_ + t0_); }
  double to_normalized(double t) const { return (t - 0.5 * (tf_ + t0_)) / scale(); }

 private:
  double t0_;
  double tf_;
};

/// x(tau) = alpha^T L v(tau) for an (M+1) x d coefficient matrix. Throws
/// DomainError if |tau| > 1 + 1e-12 and DimensionMismatch on a degree mismatch.
Eigen::VectorXd eval_spline(const Eigen::MatrixXd& alpha, const LegendreBasisMatrix& basis,
                            double tau);

/// d x / d tau = alpha^T L v'(tau). The caller applies TimeMap::scale() for d/dt.
Eigen::VectorXd eval_spline_deriv(const Eigen::MatrixXd& alpha, const LegendreBasisMatrix& basis,
                                  double tau);

/// sum_i w_i values_i. Throws DimensionMismatch if sizes differ.
double quadrature(std::span<const double> values, const SpectralGrid& grid);

}  // namespace socse

#pragma once

// Bernstein-form safety envelope of a Legendre-spline.
//
// For Legendre coefficients alpha of one channel, the monomial coefficients on
// tau in [-1, 1] are a = L^T alpha. Substituting tau = 2 s - 1 with s in [0, 1]
// gives monomial coefficients E^T a on [0, 1], and the Bernstein control values
// are p = B E^T L^T alpha = C alpha. Every value of the spline on [-1, 1] lies in
// [min p, max p]; p_0 and p_M are the spline values at tau = -1 and tau = +1.
//
// Matrix orientation: rows of B and C index Bernstein values, columns index
// coefficients. Row m of E holds the expansion of (2s - 1)^m in powers of s, so
// E (like L) is stored with zeros above the diagonal and E^T is upper triangular.

#include <Eigen/Dense>

#include "socse/polynomial.hpp"

namespace socse {

/// Entry (j, k) = C(j, k) / C(M, k) for k <= j, zero otherwise.
Eigen::MatrixXd bernstein_matrix(int degree);

/// Entry (m, r) = C(m, r) (-1)^(m - r) 2^r for r <= m, zero otherwise.
Eigen::MatrixXd binomial_shift_matrix(int degree);

struct EnvelopeMatrices {
  int degree = 0;
  Eigen::MatrixXd B;
  Eigen::MatrixXd E;
  Eigen::MatrixXd C;  ///< B * E^T * L^T
};

/// Composes C once for a given degree. Throws DimensionMismatch if the basis degree differs.
EnvelopeMatrices envelope_matrix(int degree, const LegendreBasisMatrix& basis);

struct ChannelBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

/// Per-channel [min, max] of the columns of C * alpha.
ChannelBounds spline_bounds(const Eigen::MatrixXd& alpha, const EnvelopeMatrices& env);

double binomial(int n, int k);

}  // namespace socse

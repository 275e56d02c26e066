#pragma once

// Test-only helpers: independent random matrices and reference oracles built
// on Eigen's own solvers (never on the matineq kernels under test).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>

#include <Eigen/Dense>

#include "matineq/linalg.hpp"

namespace matineq::testing {

inline Matrix gaussian(Index rows, Index cols, std::mt19937_64& rng, bool complex = true) {
  std::normal_distribution<double> nd;
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = Complex(nd(rng), complex ? nd(rng) : 0.0);
  return m;
}

/// Random PD matrix G G* + shift I.
inline Matrix random_pd_matrix(Index n, std::mt19937_64& rng, double shift = 0.1) {
  const Matrix g = gaussian(n, n, rng) / std::sqrt(static_cast<double>(n));
  return g * g.adjoint() + shift * Matrix::Identity(n, n);
}

inline RealVector oracle_eigenvalues(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  RealVector v = es.eigenvalues();
  std::sort(v.data(), v.data() + v.size(), std::greater<>());
  return v;
}

inline RealVector oracle_singular_values(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues();
}

/// P^t for Hermitian PSD P via Eigen's solver; eigenvalues clamped at 0.
inline Matrix oracle_power(const Matrix& p, double t) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (p + p.adjoint()));
  RealVector lam = es.eigenvalues();
  for (Index j = 0; j < lam.size(); ++j) lam(j) = lam(j) <= 0.0 ? 0.0 : std::pow(lam(j), t);
  return es.eigenvectors() * lam.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

/// A # B = A^{1/2} (A^{-1/2} B A^{-1/2})^{1/2} A^{1/2}.
inline Matrix oracle_geometric_mean(const Matrix& a, const Matrix& b) {
  const Matrix h = oracle_power(a, 0.5);
  const Matrix hi = oracle_power(a, -0.5);
  return h * oracle_power(hi * b * hi, 0.5) * h;
}

/// Eigenvalues of a general matrix whose spectrum is known to be real,
/// sorted descending (Eigen's nonsymmetric solver).
inline RealVector oracle_real_spectrum(const Matrix& m) {
  Eigen::ComplexEigenSolver<Matrix> es(m, false);
  RealVector v = es.eigenvalues().real();
  std::sort(v.data(), v.data() + v.size(), std::greater<>());
  return v;
}

inline RealVector clamp_sqrt(const RealVector& v) { return v.cwiseMax(0.0).cwiseSqrt(); }

}  // namespace matineq::testing

#pragma once

// Dense Hermitian / general complex matrix kernels.
//
// Matrices are Eigen::MatrixXcd; real inputs are embedded with zero imaginary
// parts. The eigensolver and SVD are cyclic Jacobi methods (two-sided for
// Hermitian matrices, one-sided Hestenes for general ones), which give small
// eigenvalues and singular values to high relative accuracy and have a natural
// sweep cap.

#include <complex>
#include <initializer_list>
#include <vector>

#include <Eigen/Dense>

#include "matineq/error.hpp"

namespace matineq {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Self-adjoint square matrix. Construction symmetrizes: H <- (H + H*) / 2.
class Hermitian {
 public:
  Hermitian() = default;
  explicit Hermitian(const Matrix& m);

  static Hermitian identity(Index n);
  static Hermitian diagonal(const std::vector<double>& d);

  Index dim() const noexcept { return m_.rows(); }
  const Matrix& matrix() const noexcept { return m_; }
  operator const Matrix&() const noexcept { return m_; }  // NOLINT(google-explicit-constructor)

 protected:
  Matrix m_;
};

/// Positive semidefinite matrix carrying its smallest computed eigenvalue.
class Psd : public Hermitian {
 public:
  Psd() = default;
  /// Validates: min eigenvalue >= -tol_psd. Throws DomainError otherwise.
  explicit Psd(const Hermitian& h);
  explicit Psd(const Matrix& m) : Psd(Hermitian(m)) {}

  /// Wraps a matrix whose smallest eigenvalue is already known (e.g. the output
  /// of a spectral function). No eigen-decomposition is performed.
  static Psd with_certificate(const Hermitian& h, double min_eig);

  double min_eig() const noexcept { return min_eig_; }

 protected:
  double min_eig_ = 0.0;
};

/// Positive definite matrix: min eigenvalue > tol_pd.
class Pd : public Psd {
 public:
  Pd() = default;
  explicit Pd(const Hermitian& h);
  explicit Pd(const Matrix& m) : Pd(Hermitian(m)) {}
  explicit Pd(const Psd& p);

  static Pd with_certificate(const Hermitian& h, double min_eig);
};

struct SpectralDecomposition {
  RealVector eigenvalues;  // non-increasing
  Matrix unitary;          // columns are eigenvectors, phase-normalized
};

struct Svd {
  RealVector singulars;  // non-increasing, length min(rows, cols)
  Matrix left;           // rows x rows unitary
  Matrix right;          // cols x cols unitary
};

struct PolarDecomposition {
  Matrix unitary;
  Psd modulus;
};

// ---------------------------------------------------------------------------
// Tolerances

/// 1e-9 * (1 + sum of spectral norms).
double default_tol(std::initializer_list<double> norms);
double tol_psd(double norm);
double tol_pd(double norm);

double spectral_norm(const Matrix& m);
double spectral_norm(const Hermitian& h);
double frobenius(const Matrix& m);

// ---------------------------------------------------------------------------
// Decompositions

/// Eigen-decomposition with descending eigenvalues. Ties are ordered by the
/// phase-normalized columns compared lexicographically. Throws NumericalFailure
/// when 100*n sweeps are not enough.
SpectralDecomposition hermitian_eig(const Hermitian& h);
RealVector eigenvalues(const Hermitian& h);

/// Full SVD (square unitaries on both sides).
Svd singular_values(const Matrix& m);
RealVector singular_value_list(const Matrix& m);

// ---------------------------------------------------------------------------
// Matrix functions

/// U diag(lambda^t) U*. t == 1 returns the input, t == 0 returns I. Negative
/// exponents require a positive definite input. 0^t = 0 for t > 0.
Psd matrix_power(const Psd& p, double t);
Psd psd_sqrt(const Psd& p);

/// General inverse (full-pivot LU). Throws DomainError if singular.
Matrix inverse(const Matrix& m);

/// A # B = A^{1/2} (A^{-1/2} B A^{-1/2})^{1/2} A^{1/2}.
Pd geometric_mean(const Pd& a, const Pd& b);

PolarDecomposition polar_decompose(const Matrix& s);

/// lambda_min(A - B).
double loewner_margin(const Hermitian& a, const Hermitian& b);
bool loewner_geq(const Hermitian& a, const Hermitian& b, double tol);

/// Number of entries above rel_cutoff * max(values).
Index numerical_rank(const RealVector& values, double rel_cutoff = 1e-8);

/// Orthogonal projection onto the span of the leading k eigenvectors.
Matrix leading_projection(const SpectralDecomposition& d, Index k);

inline std::vector<double> to_std(const RealVector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace matineq

#pragma once

// Catalogue of eigenvalue / singular-value AM-GM inequality checks. Every check
// returns per-index margins (LHS_j - RHS_j) so equality cases and near
// violations stay visible; pass/fail derives from the smallest margin.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "matineq/linalg.hpp"

namespace matineq {

struct InequalityResult {
  std::string id;
  std::vector<double> margins;
  double min_margin = 0.0;
  double tolerance = 0.0;
  bool passed = true;
  /// Set for statements that are conjectures: a failure is a candidate
  /// violation to report, never a regression.
  bool conjecture = false;
  /// Auxiliary residuals recorded by a check (named, check-specific).
  std::map<std::string, double> diagnostics;

  bool candidate_violation() const noexcept { return conjecture && !passed; }
};

/// Builds a result from margins; passed <=> min margin >= -tol.
InequalityResult make_result(std::string id, std::vector<double> margins, double tol);

/// A PSD pair plus the weight t in [0, 1] used by the weighted checks.
struct InequalityInstance {
  InequalityInstance(Psd a, Psd b, double t = 0.5);
  Psd a;
  Psd b;
  double t;
};

/// 1e-9 * (1 + ||A||_2 + ||B||_2).
double pair_tolerance(const Hermitian& a, const Hermitian& b);

// ---------------------------------------------------------------------------
// Spectral building blocks shared with the DSL evaluator. Both paths must call
// the same routines so their margins agree to rounding.

/// Eigenvalues of XY for PSD X, Y via the similar Hermitian X^{1/2} Y X^{1/2}.
RealVector product_eigenvalues(const Psd& x, const Psd& y);

/// (1 - t) A + t B.
Matrix weighted_sum(const Matrix& a, const Matrix& b, double t);

/// Elementwise square root of a spectral vector. Entries at or below the
/// rounding floor 4 n eps max|v| are treated as exact zeros; entries below
/// -tol raise NumericalFailure.
RealVector spectral_sqrt(const RealVector& v, double tol);

// ---------------------------------------------------------------------------
// Checks. `tol` defaults to pair_tolerance of the inputs.

/// (A + B) / 2 >= A # B in the Loewner order.
InequalityResult check_amgm_loewner(const Pd& a, const Pd& b, std::optional<double> tol = {});
/// A + S A^{-1} S >= 2 S in the Loewner order.
InequalityResult check_amgm_variant(const Pd& a, const Pd& s, std::optional<double> tol = {});
/// lambda_j(A + B) >= 2 lambda_j(A # B).
InequalityResult check_weyl_gm(const Pd& a, const Pd& b, std::optional<double> tol = {});
/// lambda_j(A + B) >= 2 sqrt(lambda_j(AB)). Also checks the identity
/// lambda_j(AB) = sigma_j(A^{1/2} B^{1/2})^2 and throws NumericalFailure when
/// it fails by more than tol (1 + ||A|| + ||B||). Diagnostics
/// "identity_residual" (square-root form) and "identity_residual_squared".
InequalityResult check_bk1(const Psd& a, const Psd& b, std::optional<double> tol = {});
/// lambda_j(A + B) >= 2 lambda_j(A^{1/2} B^{1/2}).
InequalityResult check_bk2(const Psd& a, const Psd& b, std::optional<double> tol = {});
/// lambda_j(A + B) >= 2 sqrt(sigma_j(AB)).
InequalityResult check_bkd(const Psd& a, const Psd& b, std::optional<double> tol = {});
/// lambda_j((1-t)A + tB) >= sigma_j(A^{1-t} B^t).
InequalityResult check_ando(const InequalityInstance& inst, std::optional<double> tol = {});
/// lambda_j((1-t)A + tB) >= lambda_j(A^{1-t} B^t).
InequalityResult check_prop4(const InequalityInstance& inst, std::optional<double> tol = {});
/// lambda_j((1-t)A + tB) >= sqrt(sigma_j(A^{2(1-t)} B^{2t})). Open statement:
/// the result has conjecture = true.
InequalityResult check_conjecture(const InequalityInstance& inst, std::optional<double> tol = {});

/// The t-grid used by sweeps: 0, 0.1, ..., 1.0 (0.5 included).
std::vector<double> default_t_grid();

}  // namespace matineq

#pragma once

// Executable reduction of lambda_j(A+B) >= 2 sqrt(sigma_j(AB)) to a statement
// about a 2x2 block matrix, plus the auxiliary block-matrix propositions and
// the lemma used to prove it. Every stage records the residuals of the
// invariants it relies on.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "matineq/inequalities.hpp"
#include "matineq/linalg.hpp"

namespace matineq {

/// Conformal partition of A against B1 = diag(X, 0). A12 is r x (n-r) and
/// A22 is (n-r) x (n-r); both are empty when r = n.
struct PartitionedPair {
  Pd x;
  Pd a11;
  Matrix a12;
  Matrix a22;

  Index r() const noexcept { return a11.dim(); }
  Index n() const noexcept { return a11.dim() + a12.cols(); }
  /// [[A11, A12], [A12*, A22]].
  Matrix assemble() const;
  /// || X (A11^2 + A12 A12*) X - I_r ||_F.
  double constraint_residual() const;
  /// 1e-8 sqrt(n) (1 + ||A||_2 + ||X||_2)^2.
  double tol_proj() const;
};

struct Prop2Instance {
  Pd m;
  Pd n;
};

struct Prop3Instance {
  Pd l;
  Pd m;
  Matrix z;
};

struct NormalizedPair {
  Pd a;
  Pd b;
  double scale = 1.0;
};

struct PartitionResult {
  PartitionedPair pair;
  Matrix basis;  // V with V* B1 V = diag(X, 0)
};

/// Fixed stage names, in execution order.
inline constexpr std::array<const char*, 5> kReductionStages = {"normalize", "b1", "partition", "a1", "prop1"};

struct StageRecord {
  std::string name;
  std::map<std::string, double> values;
  bool ok = true;
};

struct ReductionTrace {
  Index r = 0;
  double scale = 1.0;
  /// Shift applied to semidefinite inputs (0 when both were PD).
  double epsilon = 0.0;
  Pd a;   // normalized (and shifted) A
  Pd b;   // normalized (and shifted) B
  Psd b1;
  Matrix basis;
  PartitionedPair partition;
  Psd a1;  // in the original coordinates
  /// lambda_r(A+B), lambda_r(A+B1), lambda_r(A1+B1) of the normalized pair.
  std::array<double, 3> stage_eigen{};
  std::vector<StageRecord> stages;
  double tol = 0.0;
  double tol_proj = 0.0;
  InequalityResult prop1;
  /// check_bkd margin at index r on the (shifted, unnormalized) input pair.
  double bkd_margin = 0.0;

  bool ok() const;
  const StageRecord& stage(const std::string& name) const;
};

NormalizedPair normalize_pair(const Pd& a, const Pd& b, Index r);
Psd build_b1(const Pd& a, const Pd& b, Index r);
PartitionResult partition_basis(const Pd& a, const Psd& b1, Index r);
/// [[A11, A12], [A12*, A12* A11^{-1} A12]] in the partition basis.
Psd build_a1(const PartitionedPair& p);

/// margin = lambda_r([[A11+X, A12], [A12*, A12* A11^{-1} A12]]) - 2, together
/// with the factorization chain of its proof as diagnostics.
InequalityResult verify_prop1(const PartitionedPair& p, std::optional<double> tol = {});

/// margin = lambda_r(K) - 2 for K = [[S X^{-1} S*, S^{-*}], [S^{-1}, X]], with
/// the polar-similarity and compression chain as diagnostics.
InequalityResult lemma1_margin(const Pd& x, const Matrix& s, std::optional<double> tol = {});

InequalityResult check_prop2(const Prop2Instance& inst, std::optional<double> tol = {});
/// M = (L (I + Z Z*) L)^{-1/2}.
Prop3Instance make_prop3_instance(const Pd& l, const Matrix& z);
double prop3_constraint_residual(const Prop3Instance& inst);
InequalityResult check_prop3(const Prop3Instance& inst, std::optional<double> tol = {});

/// Runs normalize -> b1 -> partition -> a1 -> prop1. Semidefinite inputs are
/// replaced by A + eps' I, B + eps' I with eps' = eps (1 + ||A|| + ||B||).
/// Throws DegenerateInstance when sigma_r(AB) vanishes.
ReductionTrace run_reduction(const Psd& a, const Psd& b, Index r, double eps = 1e-8);

struct PerturbationSample {
  double eps = 0.0;
  double shift = 0.0;
  std::vector<double> margins;
  double max_deviation = 0.0;  // max_j |margin_j(eps) - margin_j(0)|
};

/// check_bkd margins of (A + eps' I, B + eps' I) for each eps, compared with
/// the margins of the unperturbed pair.
std::vector<PerturbationSample> perturbation_sweep(const Psd& a, const Psd& b,
                                                   const std::vector<double>& eps_list = {1e-4, 1e-6, 1e-8});

}  // namespace matineq

#include "matineq/inequalities.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace matineq {

namespace {

void require_same_dim(const Hermitian& a, const Hermitian& b, const char* who) {
  if (a.dim() != b.dim()) throw DimensionMismatch(std::string(who) + ": dimension mismatch");
}

InequalityResult spectral_result(std::string id, const RealVector& lhs, const RealVector& rhs, double tol) {
  return make_result(std::move(id), to_std(lhs - rhs), tol);
}

}  // namespace

InequalityResult make_result(std::string id, std::vector<double> margins, double tol) {
  InequalityResult r;
  r.id = std::move(id);
  r.margins = std::move(margins);
  r.tolerance = tol;
  r.min_margin = r.margins.empty() ? 0.0 : *std::min_element(r.margins.begin(), r.margins.end());
  r.passed = r.min_margin >= -tol;
  return r;
}

InequalityInstance::InequalityInstance(Psd a_, Psd b_, double t_) : a(std::move(a_)), b(std::move(b_)), t(t_) {
  require_same_dim(a, b, "InequalityInstance");
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("InequalityInstance: t must lie in [0, 1]");
}

double pair_tolerance(const Hermitian& a, const Hermitian& b) {
  return default_tol({spectral_norm(a), spectral_norm(b)});
}

RealVector product_eigenvalues(const Psd& x, const Psd& y) {
  require_same_dim(x, y, "product_eigenvalues");
  const Matrix root = psd_sqrt(x).matrix();
  return eigenvalues(Hermitian(root * y.matrix() * root));
}

Matrix weighted_sum(const Matrix& a, const Matrix& b, double t) { return (1.0 - t) * a + t * b; }

RealVector spectral_sqrt(const RealVector& v, double tol) {
  if (v.size() == 0) return v;
  const double floor =
      4.0 * static_cast<double>(v.size()) * std::numeric_limits<double>::epsilon() * v.cwiseAbs().maxCoeff();
  RealVector out(v.size());
  for (Index j = 0; j < v.size(); ++j) {
    if (v(j) < -tol) throw NumericalFailure("spectral_sqrt: negative spectral value", v(j));
    out(j) = v(j) <= floor ? 0.0 : std::sqrt(v(j));
  }
  return out;
}

InequalityResult check_amgm_loewner(const Pd& a, const Pd& b, std::optional<double> tol) {
  require_same_dim(a, b, "check_amgm_loewner");
  const double t = tol.value_or(pair_tolerance(a, b));
  const Hermitian mean(0.5 * a.matrix() + 0.5 * b.matrix());
  const Pd g = geometric_mean(a, b);
  return make_result("eq1", {loewner_margin(mean, g)}, t);
}

InequalityResult check_amgm_variant(const Pd& a, const Pd& s, std::optional<double> tol) {
  require_same_dim(a, s, "check_amgm_variant");
  const double t = tol.value_or(pair_tolerance(a, s));
  const Matrix lhs = a.matrix() + s.matrix() * inverse(a.matrix()) * s.matrix();
  const Matrix rhs = 2.0 * s.matrix();
  return make_result("eq2", {loewner_margin(Hermitian(lhs), Hermitian(rhs))}, t);
}

InequalityResult check_weyl_gm(const Pd& a, const Pd& b, std::optional<double> tol) {
  require_same_dim(a, b, "check_weyl_gm");
  const double t = tol.value_or(pair_tolerance(a, b));
  const RealVector lhs = eigenvalues(Hermitian(a.matrix() + b.matrix()));
  const RealVector rhs = 2.0 * eigenvalues(Hermitian(geometric_mean(a, b).matrix()));
  return spectral_result("weyl-gm", lhs, rhs, t);
}

InequalityResult check_bk1(const Psd& a, const Psd& b, std::optional<double> tol) {
  require_same_dim(a, b, "check_bk1");
  const double t = tol.value_or(pair_tolerance(a, b));
  const RealVector lhs = eigenvalues(Hermitian(a.matrix() + b.matrix()));
  const RealVector root = spectral_sqrt(product_eigenvalues(a, b), t);
  InequalityResult r = spectral_result("eq3", lhs, 2.0 * root, t);

  // sqrt(lambda_j(AB)) = sigma_j(A^{1/2} B^{1/2}). The square root amplifies
  // rounding near zero, so the identity is enforced on its squared form, at
  // the degree-2 scale tol (1 + ||A|| + ||B||).
  const RealVector sv = singular_value_list(psd_sqrt(a).matrix() * psd_sqrt(b).matrix());
  const RealVector lam = product_eigenvalues(a, b);
  const double squared = (lam - sv.cwiseProduct(sv)).cwiseAbs().maxCoeff();
  r.diagnostics["identity_residual"] = (root - sv).cwiseAbs().maxCoeff();
  r.diagnostics["identity_residual_squared"] = squared;
  const double bound = t * (1.0 + spectral_norm(a) + spectral_norm(b));
  if (squared > bound) throw NumericalFailure("check_bk1: lambda(AB) and sigma(A^{1/2}B^{1/2})^2 disagree", squared);
  return r;
}

InequalityResult check_bk2(const Psd& a, const Psd& b, std::optional<double> tol) {
  require_same_dim(a, b, "check_bk2");
  const double t = tol.value_or(pair_tolerance(a, b));
  const RealVector lhs = eigenvalues(Hermitian(a.matrix() + b.matrix()));
  const RealVector rhs = product_eigenvalues(matrix_power(a, 0.5), matrix_power(b, 0.5));
  return spectral_result("eq4", lhs, 2.0 * rhs, t);
}

InequalityResult check_bkd(const Psd& a, const Psd& b, std::optional<double> tol) {
  require_same_dim(a, b, "check_bkd");
  const double t = tol.value_or(pair_tolerance(a, b));
  const RealVector lhs = eigenvalues(Hermitian(a.matrix() + b.matrix()));
  const RealVector rhs = spectral_sqrt(singular_value_list(a.matrix() * b.matrix()), t);
  return spectral_result("eq5", lhs, 2.0 * rhs, t);
}

InequalityResult check_ando(const InequalityInstance& inst, std::optional<double> tol) {
  const double t = tol.value_or(pair_tolerance(inst.a, inst.b));
  const RealVector lhs = eigenvalues(Hermitian(weighted_sum(inst.a.matrix(), inst.b.matrix(), inst.t)));
  const Matrix prod = matrix_power(inst.a, 1.0 - inst.t).matrix() * matrix_power(inst.b, inst.t).matrix();
  return spectral_result("eq7", lhs, singular_value_list(prod), t);
}

InequalityResult check_prop4(const InequalityInstance& inst, std::optional<double> tol) {
  const double t = tol.value_or(pair_tolerance(inst.a, inst.b));
  const RealVector lhs = eigenvalues(Hermitian(weighted_sum(inst.a.matrix(), inst.b.matrix(), inst.t)));
  const RealVector rhs = product_eigenvalues(matrix_power(inst.a, 1.0 - inst.t), matrix_power(inst.b, inst.t));
  return spectral_result("eq8", lhs, rhs, t);
}

InequalityResult check_conjecture(const InequalityInstance& inst, std::optional<double> tol) {
  const double t = tol.value_or(pair_tolerance(inst.a, inst.b));
  const RealVector lhs = eigenvalues(Hermitian(weighted_sum(inst.a.matrix(), inst.b.matrix(), inst.t)));
  const Matrix prod =
      matrix_power(inst.a, 2.0 * (1.0 - inst.t)).matrix() * matrix_power(inst.b, 2.0 * inst.t).matrix();
  InequalityResult r = spectral_result("conjecture", lhs, spectral_sqrt(singular_value_list(prod), t), t);
  r.conjecture = true;
  return r;
}

std::vector<double> default_t_grid() {
  std::vector<double> grid;
  for (int k = 0; k <= 10; ++k) grid.push_back(k / 10.0);
  return grid;
}

}  // namespace matineq

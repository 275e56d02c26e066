#include "matineq/reduction.hpp"

#include <algorithm>
#include <cmath>

namespace matineq {

namespace {

Matrix block2(const Matrix& tl, const Matrix& tr, const Matrix& bl, const Matrix& br) {
  Matrix m(tl.rows() + bl.rows(), tl.cols() + tr.cols());
  m.topLeftCorner(tl.rows(), tl.cols()) = tl;
  m.topRightCorner(tr.rows(), tr.cols()) = tr;
  m.bottomLeftCorner(bl.rows(), bl.cols()) = bl;
  m.bottomRightCorner(br.rows(), br.cols()) = br;
  return m;
}

Matrix identity(Index n) { return Matrix::Identity(n, n); }

// lambda_{index} (1-based) of a Hermitian matrix.
double lambda_at(const Matrix& h, Index index) { return eigenvalues(Hermitian(h))(index - 1); }

void check_index(Index r, Index n, const char* who) {
  if (r < 1 || r > n) throw DomainError(std::string(who) + ": index r must satisfy 1 <= r <= n");
}

Pd shifted(const Psd& p, double shift) {
  const Index n = p.dim();
  return Pd(Hermitian(p.matrix() + shift * identity(n)));
}

}  // namespace

// ---------------------------------------------------------------------------

Matrix PartitionedPair::assemble() const {
  return block2(a11.matrix(), a12, a12.adjoint(), a22);
}

double PartitionedPair::constraint_residual() const {
  const Matrix& x_ = x.matrix();
  const Matrix& a = a11.matrix();
  return (x_ * (a * a + a12 * a12.adjoint()) * x_ - identity(r())).norm();
}

double PartitionedPair::tol_proj() const {
  const double s = 1.0 + spectral_norm(Hermitian(assemble())) + spectral_norm(x);
  return 1e-8 * std::sqrt(static_cast<double>(n())) * s * s;
}

bool ReductionTrace::ok() const {
  return std::all_of(stages.begin(), stages.end(), [](const StageRecord& s) { return s.ok; });
}

const StageRecord& ReductionTrace::stage(const std::string& name) const {
  for (const auto& s : stages)
    if (s.name == name) return s;
  throw DomainError("ReductionTrace: no stage named " + name);
}

// ---------------------------------------------------------------------------

NormalizedPair normalize_pair(const Pd& a, const Pd& b, Index r) {
  if (a.dim() != b.dim()) throw DimensionMismatch("normalize_pair: dimension mismatch");
  check_index(r, a.dim(), "normalize_pair");
  const double sigma_r = singular_value_list(a.matrix() * b.matrix())(r - 1);
  if (sigma_r <= pair_tolerance(a, b)) throw DegenerateInstance("normalize_pair: sigma_r(AB) vanishes");
  const double c = 1.0 / std::sqrt(sigma_r);
  if (c == 1.0) return {a, b, 1.0};
  return {Pd::with_certificate(Hermitian(c * a.matrix()), c * a.min_eig()),
          Pd::with_certificate(Hermitian(c * b.matrix()), c * b.min_eig()), c};
}

Psd build_b1(const Pd& a, const Pd& b, Index r) {
  if (a.dim() != b.dim()) throw DimensionMismatch("build_b1: dimension mismatch");
  const Index n = a.dim();
  check_index(r, n, "build_b1");
  // Left singular vectors of AB are eigenvectors of AB^2A = (AB)(AB)*, and
  // sigma_r^2 = lambda_r; the SVD keeps both accurate when ||AB|| is large.
  const Svd d = singular_values(a.matrix() * b.matrix());
  const double lambda_r = d.singulars(r - 1) * d.singulars(r - 1);
  if (lambda_r < 1.0 - pair_tolerance(a, b))
    throw PreconditionViolation("build_b1: lambda_r(AB^2A) = " + std::to_string(lambda_r) +
                                " < 1; normalize the pair first");

  // B1^2 = A^{-1} P A^{-1} = W W* with W = A^{-1} U_r; the square root is
  // Q diag(sigma) Q* from the SVD of W, which keeps the kernel exact.
  const Matrix w = matrix_power(a, -1.0).matrix() * d.left.leftCols(r);
  const Svd f = singular_values(w);
  const Matrix q = f.left.leftCols(r);
  const Matrix b1 = q * f.singulars.cast<Complex>().asDiagonal() * q.adjoint();
  return Psd::with_certificate(Hermitian(b1), r == n ? f.singulars(r - 1) : 0.0);
}

PartitionResult partition_basis(const Pd& a, const Psd& b1, Index r) {
  if (a.dim() != b1.dim()) throw DimensionMismatch("partition_basis: dimension mismatch");
  const Index n = a.dim();
  check_index(r, n, "partition_basis");
  const SpectralDecomposition d = hermitian_eig(b1);
  if (numerical_rank(d.eigenvalues) != r) throw PreconditionViolation("partition_basis: rank(B1) != r");

  PartitionResult out;
  out.basis = d.unitary;
  const Matrix& v = out.basis;
  const Matrix bp = v.adjoint() * b1.matrix() * v;
  const Matrix ap = Hermitian(v.adjoint() * a.matrix() * v).matrix();
  out.pair.x = Pd(Hermitian(bp.topLeftCorner(r, r)));
  out.pair.a11 = Pd(Hermitian(ap.topLeftCorner(r, r)));
  out.pair.a12 = ap.topRightCorner(r, n - r);
  out.pair.a22 = ap.bottomRightCorner(n - r, n - r);
  return out;
}

Psd build_a1(const PartitionedPair& p) {
  const Matrix schur = p.a12.adjoint() * matrix_power(p.a11, -1.0).matrix() * p.a12;
  return Psd(Hermitian(block2(p.a11.matrix(), p.a12, p.a12.adjoint(), schur)));
}

// ---------------------------------------------------------------------------

InequalityResult verify_prop1(const PartitionedPair& p, std::optional<double> tol) {
  const Index r = p.r();
  const Index n = p.n();
  const double t = tol.value_or(default_tol({spectral_norm(Hermitian(p.assemble())), spectral_norm(p.x)}));
  const double tproj = p.tol_proj();

  const Matrix a11_half = matrix_power(p.a11, 0.5).matrix();
  const Matrix a11_neg_half = matrix_power(p.a11, -0.5).matrix();
  const Matrix x_half = matrix_power(p.x, 0.5).matrix();
  const Matrix x_neg2 = matrix_power(p.x, -2.0).matrix();
  const Matrix schur = p.a12.adjoint() * matrix_power(p.a11, -1.0).matrix() * p.a12;

  const Matrix block = block2(p.a11.matrix() + p.x.matrix(), p.a12, p.a12.adjoint(), schur);
  const RealVector ev = eigenvalues(Hermitian(block));
  InequalityResult res = make_result("prop1", {ev(r - 1) - 2.0}, t);

  // block = F F*
  const Matrix f = block2(a11_half, x_half, p.a12.adjoint() * a11_neg_half, Matrix::Zero(n - r, r));
  const Matrix ff_adj = f * f.adjoint();
  const Matrix f_adj_f = f.adjoint() * f;
  const double factor_residual = (ff_adj - block).norm();

  // nonzero spectra of F F* (n) and F* F (2r) coincide
  const RealVector e1 = eigenvalues(Hermitian(ff_adj));
  const RealVector e2 = eigenvalues(Hermitian(f_adj_f));
  const Index k = std::min(n, 2 * r);
  double spectrum_residual = (e1.head(k) - e2.head(k)).cwiseAbs().maxCoeff();
  if (e1.size() > k) spectrum_residual = std::max(spectrum_residual, e1.tail(e1.size() - k).cwiseAbs().maxCoeff());
  if (e2.size() > k) spectrum_residual = std::max(spectrum_residual, e2.tail(e2.size() - k).cwiseAbs().maxCoeff());

  // F* F in closed form, using the constraint X (A11^2 + A12 A12*) X = I
  const Matrix gram = block2(a11_neg_half * x_neg2 * a11_neg_half, a11_half * x_half, x_half * a11_half, p.x.matrix());
  const double gram_residual = (f_adj_f - gram).norm();

  const Matrix s = a11_neg_half * matrix_power(p.x, -0.5).matrix();
  const InequalityResult lemma = lemma1_margin(p.x, s);

  res.diagnostics["factor_residual"] = factor_residual;
  res.diagnostics["spectrum_residual"] = spectrum_residual;
  res.diagnostics["gram_residual"] = gram_residual;
  res.diagnostics["constraint_residual"] = p.constraint_residual();
  res.diagnostics["lemma1_margin"] = lemma.min_margin;
  res.diagnostics["tol_proj"] = tproj;
  const bool chain_ok = factor_residual <= tproj && spectrum_residual <= tproj && gram_residual <= tproj &&
                        lemma.min_margin >= -lemma.tolerance && lemma.diagnostics.at("chain_ok") == 1.0;
  res.diagnostics["chain_ok"] = chain_ok ? 1.0 : 0.0;
  return res;
}

InequalityResult lemma1_margin(const Pd& x, const Matrix& s, std::optional<double> tol) {
  const Index r = x.dim();
  if (s.rows() != r || s.cols() != r) throw DimensionMismatch("lemma1_margin: S must be r x r");
  const RealVector sv = singular_value_list(s);
  if (!(sv(r - 1) > 1e-12 * (1.0 + sv(0)))) throw DomainError("lemma1_margin: S is singular");

  const Matrix x_inv = matrix_power(x, -1.0).matrix();
  const Matrix s_inv = inverse(s);
  const Matrix k = block2(s * x_inv * s.adjoint(), s_inv.adjoint(), s_inv, x.matrix());
  const RealVector ek = eigenvalues(Hermitian(k));
  const double t = tol.value_or(default_tol({std::max(std::abs(ek(0)), std::abs(ek(2 * r - 1)))}));
  InequalityResult res = make_result("lemma1", {ek(r - 1) - 2.0}, t);

  // unitary similarity through the polar factor: diag(U, I)* K diag(U, I)
  const PolarDecomposition polar = polar_decompose(s);
  const Matrix& mod = polar.modulus.matrix();
  const Matrix mod_inv = inverse(mod);
  const Matrix k2 = block2(mod * x_inv * mod, mod_inv, mod_inv, x.matrix());
  const Matrix w = block2(polar.unitary, Matrix::Zero(r, r), Matrix::Zero(r, r), identity(r));
  const double similarity_residual = (w.adjoint() * k * w - k2).norm();
  const double spectrum_residual = (ek - eigenvalues(Hermitian(k2))).cwiseAbs().maxCoeff();

  // compression by the isometry P = [I; I] / sqrt(2)
  Matrix p(2 * r, r);
  p << identity(r), identity(r);
  p /= std::sqrt(2.0);
  const Matrix compressed = p.adjoint() * k2 * p;
  const Matrix closed_form = 0.5 * (x.matrix() + mod * x_inv * mod) + mod_inv;
  const double compression_residual = (compressed - closed_form).norm();

  const double lambda_k = ek(r - 1);
  const double lambda_compressed = lambda_at(closed_form, r);
  const double lambda_modulus = lambda_at(mod + mod_inv, r);
  const bool chain_ok =
      lambda_k >= lambda_compressed - t && lambda_compressed >= lambda_modulus - t && lambda_modulus >= 2.0 - t;

  res.diagnostics["lambda_k"] = lambda_k;
  res.diagnostics["lambda_compressed"] = lambda_compressed;
  res.diagnostics["lambda_modulus"] = lambda_modulus;
  res.diagnostics["similarity_residual"] = similarity_residual;
  res.diagnostics["spectrum_residual"] = spectrum_residual;
  res.diagnostics["compression_residual"] = compression_residual;
  res.diagnostics["chain_ok"] = chain_ok ? 1.0 : 0.0;
  return res;
}

InequalityResult check_prop2(const Prop2Instance& inst, std::optional<double> tol) {
  if (inst.m.dim() != inst.n.dim()) throw DimensionMismatch("check_prop2: dimension mismatch");
  const Index r = inst.m.dim();
  const Matrix g_inv = matrix_power(geometric_mean(inst.m, inst.n), -1.0).matrix();
  const Matrix big = block2(inst.m.matrix(), g_inv, g_inv, inst.n.matrix());
  const RealVector ev = eigenvalues(Hermitian(big));
  const double t = tol.value_or(default_tol({std::max(std::abs(ev(0)), std::abs(ev(2 * r - 1)))}));
  InequalityResult res = make_result("prop2", {ev(r - 1) - 2.0}, t);
  res.diagnostics["lambda_r"] = ev(r - 1);
  res.diagnostics["lambda_min"] = ev(2 * r - 1);
  return res;
}

Prop3Instance make_prop3_instance(const Pd& l, const Matrix& z) {
  const Index r = l.dim();
  if (z.rows() != r || z.cols() != r) throw DimensionMismatch("make_prop3_instance: Z must be r x r");
  const Matrix& lm = l.matrix();
  const Psd inner(Hermitian(lm * (identity(r) + z * z.adjoint()) * lm));
  return {l, Pd(matrix_power(inner, -0.5)), z};
}

double prop3_constraint_residual(const Prop3Instance& inst) {
  const Index r = inst.l.dim();
  const Matrix& l = inst.l.matrix();
  const Matrix& m = inst.m.matrix();
  return (m * l * (identity(r) + inst.z * inst.z.adjoint()) * l * m - identity(r)).norm();
}

InequalityResult check_prop3(const Prop3Instance& inst, std::optional<double> tol) {
  const Index r = inst.l.dim();
  if (inst.m.dim() != r || inst.z.rows() != r || inst.z.cols() != r)
    throw DimensionMismatch("check_prop3: L, M, Z must all be r x r");
  const Matrix& l = inst.l.matrix();
  const Matrix lz = l * inst.z;
  const Matrix big = block2(l + inst.m.matrix(), lz, lz.adjoint(), inst.z.adjoint() * lz);
  const RealVector ev = eigenvalues(Hermitian(big));
  const double t = tol.value_or(default_tol({std::max(std::abs(ev(0)), std::abs(ev(2 * r - 1)))}));
  // T = diag(M, 0) + [L^{1/2}; Z* L^{1/2}] [L^{1/2}, L^{1/2} Z] is PSD by construction
  if (ev(2 * r - 1) < -t) throw NumericalFailure("check_prop3: T has a negative eigenvalue", ev(2 * r - 1));
  InequalityResult res = make_result("prop3", {ev(r - 1) - 2.0}, t);
  res.diagnostics["lambda_r"] = ev(r - 1);
  res.diagnostics["lambda_min"] = ev(2 * r - 1);
  res.diagnostics["constraint_residual"] = prop3_constraint_residual(inst);
  return res;
}

// ---------------------------------------------------------------------------

ReductionTrace run_reduction(const Psd& a_in, const Psd& b_in, Index r, double eps) {
  if (a_in.dim() != b_in.dim()) throw DimensionMismatch("run_reduction: dimension mismatch");
  const Index n = a_in.dim();
  check_index(r, n, "run_reduction");

  ReductionTrace tr;
  tr.r = r;
  const double na = spectral_norm(a_in);
  const double nb = spectral_norm(b_in);
  const bool definite = a_in.min_eig() > tol_pd(na) && b_in.min_eig() > tol_pd(nb);
  tr.epsilon = definite ? 0.0 : eps * (1.0 + na + nb);
  const Pd a0 = definite ? Pd(static_cast<const Psd&>(a_in)) : shifted(a_in, tr.epsilon);
  const Pd b0 = definite ? Pd(static_cast<const Psd&>(b_in)) : shifted(b_in, tr.epsilon);

  // normalize
  const NormalizedPair np = normalize_pair(a0, b0, r);
  tr.scale = np.scale;
  tr.a = np.a;
  tr.b = np.b;
  const Matrix& a = tr.a.matrix();
  const Matrix& b = tr.b.matrix();
  const double norm_a = spectral_norm(tr.a);
  const double norm_b = spectral_norm(tr.b);
  tr.tol = default_tol({norm_a, norm_b});
  tr.tol_proj = 1e-8 * std::sqrt(static_cast<double>(n)) * std::pow(1.0 + norm_a + norm_b, 2);
  const double tol = tr.tol;
  {
    StageRecord s{"normalize", {}, true};
    const double sigma_r = singular_value_list(a * b)(r - 1);
    s.values["scale"] = tr.scale;
    s.values["epsilon"] = tr.epsilon;
    s.values["sigma_r"] = sigma_r;
    s.ok = std::abs(sigma_r - 1.0) <= tol;
    tr.stages.push_back(s);
  }

  // b1
  tr.b1 = build_b1(tr.a, tr.b, r);
  const Matrix& b1 = tr.b1.matrix();
  tr.stage_eigen[0] = lambda_at(a + b, r);
  tr.stage_eigen[1] = lambda_at(a + b1, r);
  {
    StageRecord s{"b1", {}, true};
    const Matrix ur = singular_values(a * b).left.leftCols(r);
    const Matrix proj = ur * ur.adjoint();
    const double ab1a_residual = (a * b1 * b1 * a - proj).norm();
    const Hermitian b1a2b1(b1 * a * a * b1);
    const double b1a2b1_residual = (b1a2b1.matrix() - leading_projection(hermitian_eig(b1a2b1), r)).norm();
    const Index rank = numerical_rank(eigenvalues(tr.b1));
    const double b_minus_b1 = loewner_margin(tr.b, tr.b1);
    const double b2_minus_b12 = loewner_margin(Hermitian(b * b), Hermitian(b1 * b1));
    s.values["rank"] = static_cast<double>(rank);
    s.values["ab1a_projection_residual"] = ab1a_residual;
    s.values["b1a2b1_projection_residual"] = b1a2b1_residual;
    s.values["b_minus_b1_min_eig"] = b_minus_b1;
    s.values["b2_minus_b1sq_min_eig"] = b2_minus_b12;
    s.values["lambda_r_a_plus_b"] = tr.stage_eigen[0];
    s.values["lambda_r_a_plus_b1"] = tr.stage_eigen[1];
    s.ok = rank == r && ab1a_residual <= tr.tol_proj && b1a2b1_residual <= tr.tol_proj && b_minus_b1 >= -tol &&
           b2_minus_b12 >= -tol && tr.stage_eigen[0] >= tr.stage_eigen[1] - tol;
    tr.stages.push_back(s);
  }

  // partition
  PartitionResult part = partition_basis(tr.a, tr.b1, r);
  tr.basis = part.basis;
  tr.partition = part.pair;
  {
    StageRecord s{"partition", {}, true};
    const double constraint = tr.partition.constraint_residual();
    const double unitarity = (tr.basis.adjoint() * tr.basis - Matrix::Identity(n, n)).norm();
    Matrix b1_rotated = tr.basis.adjoint() * b1 * tr.basis;
    b1_rotated.topLeftCorner(r, r) -= tr.partition.x.matrix();
    s.values["constraint_residual"] = constraint;
    s.values["basis_unitarity_residual"] = unitarity;
    s.values["block_residual"] = b1_rotated.norm();
    s.ok = constraint <= tr.tol_proj && unitarity <= 1e-10 * static_cast<double>(n) && b1_rotated.norm() <= tr.tol_proj;
    tr.stages.push_back(s);
  }

  // a1
  const Psd a1_local = build_a1(tr.partition);
  tr.a1 = Psd(Hermitian(tr.basis * a1_local.matrix() * tr.basis.adjoint()));
  tr.stage_eigen[2] = lambda_at(tr.a1.matrix() + b1, r);
  {
    StageRecord s{"a1", {}, true};
    const double a_minus_a1 = loewner_margin(tr.a, tr.a1);
    s.values["a_minus_a1_min_eig"] = a_minus_a1;
    s.values["a1_min_eig"] = tr.a1.min_eig();
    s.values["lambda_r_a1_plus_b1"] = tr.stage_eigen[2];
    s.ok = a_minus_a1 >= -tol && tr.stage_eigen[1] >= tr.stage_eigen[2] - tol;
    tr.stages.push_back(s);
  }

  // prop1
  tr.prop1 = verify_prop1(tr.partition, tol);
  tr.bkd_margin = check_bkd(a0, b0).margins[static_cast<size_t>(r - 1)];
  {
    StageRecord s{"prop1", tr.prop1.diagnostics, true};
    s.values["margin"] = tr.prop1.min_margin;
    s.values["bkd_margin"] = tr.bkd_margin;
    const double bkd_tol = pair_tolerance(a0, b0);
    s.ok = tr.prop1.passed && tr.prop1.diagnostics.at("chain_ok") == 1.0 && tr.stage_eigen[2] >= 2.0 - tol &&
           tr.bkd_margin >= -bkd_tol;
    tr.stages.push_back(s);
  }
  return tr;
}

std::vector<PerturbationSample> perturbation_sweep(const Psd& a, const Psd& b, const std::vector<double>& eps_list) {
  const std::vector<double> base = check_bkd(a, b).margins;
  const double scale = 1.0 + spectral_norm(a) + spectral_norm(b);
  std::vector<PerturbationSample> out;
  for (double eps : eps_list) {
    PerturbationSample s;
    s.eps = eps;
    s.shift = eps * scale;
    s.margins = check_bkd(Psd(Hermitian(a.matrix() + s.shift * identity(a.dim()))),
                          Psd(Hermitian(b.matrix() + s.shift * identity(b.dim()))))
                    .margins;
    for (size_t j = 0; j < base.size(); ++j) s.max_deviation = std::max(s.max_deviation, std::abs(s.margins[j] - base[j]));
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace matineq

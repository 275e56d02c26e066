#include "matineq/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace matineq {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Rotation parameters that annihilate the off-diagonal entry g of the 2x2
// Hermitian block [[app, g], [conj(g), aqq]]. The unitary is
//   G = [[c, s], [-s conj(e), c conj(e)]],  e = g / |g|,
// and after G* B G the diagonal is (app - t|g|, aqq + t|g|).
struct Rotation {
  double c;
  double s;
  double t;
  Complex phase;
};

Rotation make_rotation(double app, double aqq, Complex g, double abs_g) {
  const double theta = (aqq - app) / (2.0 * abs_g);
  double t = 1.0 / (std::abs(theta) + std::hypot(theta, 1.0));
  if (theta < 0.0) t = -t;
  const double c = 1.0 / std::sqrt(1.0 + t * t);
  return {c, t * c, t, g / abs_g};
}

// Columns p, q of m <- m G.
void rotate_columns(Matrix& m, Index p, Index q, const Rotation& r) {
  const Complex ce = std::conj(r.phase);
  for (Index k = 0; k < m.rows(); ++k) {
    const Complex mp = m(k, p);
    const Complex mq = m(k, q);
    m(k, p) = r.c * mp - r.s * ce * mq;
    m(k, q) = r.s * mp + r.c * ce * mq;
  }
}

// Rows p, q of m <- G* m.
void rotate_rows(Matrix& m, Index p, Index q, const Rotation& r) {
  for (Index k = 0; k < m.cols(); ++k) {
    const Complex mp = m(p, k);
    const Complex mq = m(q, k);
    m(p, k) = r.c * mp - r.s * r.phase * mq;
    m(q, k) = r.s * mp + r.c * r.phase * mq;
  }
}

double off_norm(const Matrix& a) {
  double s = 0.0;
  for (Index q = 0; q < a.cols(); ++q)
    for (Index p = 0; p < q; ++p) s += std::norm(a(p, q));
  return std::sqrt(2.0 * s);
}

// Two-sided cyclic Jacobi. On exit a is diagonal (up to entries below the
// skip threshold, which are zeroed) and, if v != nullptr, v holds the
// accumulated rotations.
void jacobi_hermitian(Matrix& a, Matrix* v) {
  const Index n = a.rows();
  for (Index i = 0; i < n; ++i) a(i, i) = a(i, i).real();
  const double abs_floor = std::max(std::numeric_limits<double>::min(), 1e-3 * kEps * a.norm());
  const Index cap = 100 * n;
  for (Index sweep = 0;; ++sweep) {
    bool rotated = false;
    for (Index q = 1; q < n; ++q) {
      for (Index p = 0; p < q; ++p) {
        const Complex g = a(p, q);
        const double abs_g = std::abs(g);
        if (abs_g == 0.0) continue;
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        if (abs_g <= 0.5 * kEps * std::sqrt(std::abs(app * aqq)) || abs_g <= abs_floor) {
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          continue;
        }
        const Rotation r = make_rotation(app, aqq, g, abs_g);
        rotate_columns(a, p, q, r);
        rotate_rows(a, p, q, r);
        a(p, p) = app - r.t * abs_g;
        a(q, q) = aqq + r.t * abs_g;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        if (v != nullptr) rotate_columns(*v, p, q, r);
        rotated = true;
      }
    }
    if (!rotated) return;
    if (sweep + 1 >= cap) throw NumericalFailure("hermitian_eig: sweep cap exceeded", off_norm(a));
  }
}

void normalize_phase(Matrix& u) {
  for (Index j = 0; j < u.cols(); ++j) {
    for (Index k = 0; k < u.rows(); ++k) {
      const double mag = std::abs(u(k, j));
      if (mag > 1e-12) {
        u.col(j) *= std::conj(u(k, j)) / mag;
        u(k, j) = mag;
        break;
      }
    }
  }
}

// true if column a precedes column b: entries compared in order, real then
// imaginary part, larger first.
bool column_precedes(const Matrix& u, Index a, Index b) {
  for (Index k = 0; k < u.rows(); ++k) {
    const Complex x = u(k, a);
    const Complex y = u(k, b);
    if (x.real() != y.real()) return x.real() > y.real();
    if (x.imag() != y.imag()) return x.imag() > y.imag();
  }
  return false;
}

std::vector<Index> descending_order(const RealVector& values) {
  std::vector<Index> idx(static_cast<size_t>(values.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Index i, Index j) { return values(i) > values(j); });
  return idx;
}

// Orthonormal completion: columns flagged `keep` are already orthonormal; the
// remaining ones are replaced by the standard basis vector with the largest
// residual after projecting out the accepted columns.
void complete_unitary(Matrix& u, const std::vector<bool>& keep) {
  const Index m = u.rows();
  std::vector<Index> accepted;
  for (Index j = 0; j < u.cols(); ++j)
    if (keep[static_cast<size_t>(j)]) accepted.push_back(j);
  for (Index j = 0; j < u.cols(); ++j) {
    if (keep[static_cast<size_t>(j)]) continue;
    Eigen::VectorXcd best;
    double best_norm = -1.0;
    for (Index i = 0; i < m; ++i) {
      Eigen::VectorXcd x = Eigen::VectorXcd::Unit(m, i);
      for (int pass = 0; pass < 2; ++pass)
        for (Index a : accepted) x -= u.col(a) * u.col(a).dot(x);
      const double nx = x.norm();
      if (nx > best_norm + 1e-12) {
        best_norm = nx;
        best = x;
      }
    }
    u.col(j) = best / best_norm;
    accepted.push_back(j);
  }
}

Svd svd_impl(const Matrix& m, bool vectors) {
  if (m.rows() < m.cols()) {
    Svd t = svd_impl(m.adjoint(), vectors);
    std::swap(t.left, t.right);
    return t;
  }
  const Index rows = m.rows();
  const Index n = m.cols();
  Matrix w = m;
  Matrix v;
  if (vectors) v = Matrix::Identity(n, n);
  const Index cap = 100 * std::max<Index>(n, 1);
  // A column inner product carries rounding of order rows * eps, so a
  // stricter test can cycle without converging.
  const double rel = static_cast<double>(std::max<Index>(rows, 1)) * kEps;
  const double fro = m.norm();
  const double abs_floor = std::max(std::numeric_limits<double>::min(), kEps * kEps * fro * fro);
  for (Index sweep = 0;; ++sweep) {
    bool rotated = false;
    double worst = 0.0;
    for (Index q = 1; q < n; ++q) {
      for (Index p = 0; p < q; ++p) {
        const double alpha = w.col(p).squaredNorm();
        const double beta = w.col(q).squaredNorm();
        const Complex gamma = w.col(p).dot(w.col(q));
        const double abs_g = std::abs(gamma);
        if (abs_g <= abs_floor || abs_g <= rel * std::sqrt(alpha) * std::sqrt(beta)) continue;
        worst = std::max(worst, abs_g / std::sqrt(alpha * beta));
        const Rotation r = make_rotation(alpha, beta, gamma, abs_g);
        rotate_columns(w, p, q, r);
        if (vectors) rotate_columns(v, p, q, r);
        rotated = true;
      }
    }
    if (!rotated) break;
    if (sweep + 1 >= cap) throw NumericalFailure("singular_values: sweep cap exceeded", worst);
  }

  RealVector norms(n);
  for (Index j = 0; j < n; ++j) norms(j) = w.col(j).norm();
  const std::vector<Index> order = descending_order(norms);
  Svd out;
  out.singulars.resize(n);
  for (Index j = 0; j < n; ++j) out.singulars(j) = norms(order[static_cast<size_t>(j)]);
  if (!vectors) return out;

  out.right.resize(n, n);
  out.left = Matrix::Zero(rows, rows);
  const double smax = n > 0 ? out.singulars(0) : 0.0;
  const double cutoff = static_cast<double>(rows) * kEps * smax;
  std::vector<bool> keep(static_cast<size_t>(rows), false);
  for (Index j = 0; j < n; ++j) {
    const Index src = order[static_cast<size_t>(j)];
    out.right.col(j) = v.col(src);
    if (out.singulars(j) > cutoff && out.singulars(j) > 0.0) {
      out.left.col(j) = w.col(src) / out.singulars(j);
      keep[static_cast<size_t>(j)] = true;
    }
  }
  complete_unitary(out.left, keep);
  return out;
}

Matrix reassemble(const Matrix& u, const RealVector& d) {
  return u * d.asDiagonal() * u.adjoint();
}

}  // namespace

// ---------------------------------------------------------------------------

Hermitian::Hermitian(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("Hermitian: matrix is not square");
  if (m.rows() < 1) throw DimensionMismatch("Hermitian: empty matrix");
  m_ = (m + m.adjoint()) * 0.5;
}

Hermitian Hermitian::identity(Index n) { return Hermitian(Matrix::Identity(n, n)); }

Hermitian Hermitian::diagonal(const std::vector<double>& d) {
  RealVector v = Eigen::Map<const RealVector>(d.data(), static_cast<Index>(d.size()));
  return Hermitian(Matrix(v.cast<Complex>().asDiagonal()));
}

Psd::Psd(const Hermitian& h) : Hermitian(h) {
  const RealVector ev = eigenvalues(h);
  const double norm = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  min_eig_ = ev(ev.size() - 1);
  if (min_eig_ < -tol_psd(norm))
    throw DomainError("matrix is not positive semidefinite (min eigenvalue " + std::to_string(min_eig_) + ")");
}

Psd Psd::with_certificate(const Hermitian& h, double min_eig) {
  Psd p;
  static_cast<Hermitian&>(p) = h;
  p.min_eig_ = min_eig;
  return p;
}

Pd::Pd(const Hermitian& h) {
  static_cast<Hermitian&>(*this) = h;
  const RealVector ev = eigenvalues(h);
  const double norm = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  min_eig_ = ev(ev.size() - 1);
  if (!(min_eig_ > tol_pd(norm)))
    throw DomainError("matrix is not positive definite (min eigenvalue " + std::to_string(min_eig_) + ")");
}

Pd::Pd(const Psd& p) {
  static_cast<Psd&>(*this) = p;
  const double norm = spectral_norm(static_cast<const Hermitian&>(p));
  if (!(min_eig_ > tol_pd(norm)))
    throw DomainError("matrix is not positive definite (min eigenvalue " + std::to_string(min_eig_) + ")");
}

Pd Pd::with_certificate(const Hermitian& h, double min_eig) {
  Pd p;
  static_cast<Psd&>(p) = Psd::with_certificate(h, min_eig);
  return p;
}

// ---------------------------------------------------------------------------

double default_tol(std::initializer_list<double> norms) {
  double s = 1.0;
  for (double x : norms) s += x;
  return 1e-9 * s;
}

double tol_psd(double norm) { return 1e-10 * (1.0 + norm); }
double tol_pd(double norm) { return 1e-12 * (1.0 + norm); }

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return singular_value_list(m)(0);
}

double spectral_norm(const Hermitian& h) {
  const RealVector ev = eigenvalues(h);
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

double frobenius(const Matrix& m) { return m.norm(); }

// ---------------------------------------------------------------------------

SpectralDecomposition hermitian_eig(const Hermitian& h) {
  const Index n = h.dim();
  Matrix a = h.matrix();
  Matrix v = Matrix::Identity(n, n);
  jacobi_hermitian(a, &v);
  normalize_phase(v);

  RealVector values = a.diagonal().real();
  std::vector<Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index i, Index j) {
    if (values(i) != values(j)) return values(i) > values(j);
    return column_precedes(v, i, j);
  });

  SpectralDecomposition d;
  d.eigenvalues.resize(n);
  d.unitary.resize(n, n);
  for (Index j = 0; j < n; ++j) {
    const Index src = order[static_cast<size_t>(j)];
    d.eigenvalues(j) = values(src);
    d.unitary.col(j) = v.col(src);
  }
  return d;
}

RealVector eigenvalues(const Hermitian& h) {
  Matrix a = h.matrix();
  jacobi_hermitian(a, nullptr);
  RealVector values = a.diagonal().real();
  std::sort(values.data(), values.data() + values.size(), std::greater<>());
  return values;
}

Svd singular_values(const Matrix& m) { return svd_impl(m, true); }

RealVector singular_value_list(const Matrix& m) { return svd_impl(m, false).singulars; }

// ---------------------------------------------------------------------------

Psd matrix_power(const Psd& p, double t) {
  if (t == 1.0) return p;
  const Index n = p.dim();
  if (t == 0.0) return Psd::with_certificate(Hermitian::identity(n), 1.0);

  const SpectralDecomposition d = hermitian_eig(p);
  const double norm = std::max(std::abs(d.eigenvalues(0)), std::abs(d.eigenvalues(n - 1)));
  const double lmin = d.eigenvalues(n - 1);
  if (lmin < -tol_psd(norm))
    throw DomainError("matrix_power: negative eigenvalue " + std::to_string(lmin));
  if (t < 0.0 && !(lmin > tol_pd(norm)))
    throw DomainError("matrix_power: negative exponent needs a positive definite matrix");

  RealVector f(n);
  for (Index j = 0; j < n; ++j) {
    const double lam = std::max(d.eigenvalues(j), 0.0);
    f(j) = lam == 0.0 ? 0.0 : std::pow(lam, t);
  }
  return Psd::with_certificate(Hermitian(reassemble(d.unitary, f)), f.minCoeff());
}

Psd psd_sqrt(const Psd& p) { return matrix_power(p, 0.5); }

Matrix inverse(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("inverse: matrix is not square");
  Eigen::FullPivLU<Matrix> lu(m);
  if (!lu.isInvertible()) throw DomainError("inverse: matrix is singular");
  return lu.inverse();
}

Pd geometric_mean(const Pd& a, const Pd& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch("geometric_mean: dimension mismatch");
  const SpectralDecomposition d = hermitian_eig(a);
  const RealVector root = d.eigenvalues.cwiseSqrt();
  const Matrix a_half = reassemble(d.unitary, root);
  const Matrix a_neg_half = reassemble(d.unitary, root.cwiseInverse());
  const Psd inner(Hermitian(a_neg_half * b.matrix() * a_neg_half));
  const Psd inner_half = psd_sqrt(inner);
  return Pd(Hermitian(a_half * inner_half.matrix() * a_half));
}

PolarDecomposition polar_decompose(const Matrix& s) {
  if (s.rows() != s.cols()) throw DimensionMismatch("polar_decompose: matrix is not square");
  const Svd f = singular_values(s);
  PolarDecomposition out;
  out.unitary = f.left * f.right.adjoint();
  out.modulus = Psd::with_certificate(Hermitian(reassemble(f.right, f.singulars)),
                                      f.singulars(f.singulars.size() - 1));
  return out;
}

double loewner_margin(const Hermitian& a, const Hermitian& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch("loewner_margin: dimension mismatch");
  const RealVector ev = eigenvalues(Hermitian(a.matrix() - b.matrix()));
  return ev(ev.size() - 1);
}

bool loewner_geq(const Hermitian& a, const Hermitian& b, double tol) { return loewner_margin(a, b) >= -tol; }

Index numerical_rank(const RealVector& values, double rel_cutoff) {
  if (values.size() == 0) return 0;
  const double vmax = values.cwiseAbs().maxCoeff();
  if (vmax == 0.0) return 0;
  Index r = 0;
  for (Index j = 0; j < values.size(); ++j)
    if (values(j) > rel_cutoff * vmax) ++r;
  return r;
}

Matrix leading_projection(const SpectralDecomposition& d, Index k) {
  const auto u = d.unitary.leftCols(k);
  return u * u.adjoint();
}

}  // namespace matineq

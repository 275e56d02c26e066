#include "matineq/generators.hpp"

#include <cmath>
#include <vector>

namespace matineq {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Matrix haar_from(Index n, Field field, std::mt19937_64& rng) {
  const Matrix g = gaussian_matrix(n, n, field, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix& r = qr.matrixQR();
  for (Index j = 0; j < n; ++j) {
    const double mag = std::abs(r(j, j));
    if (mag > 0.0) q.col(j) *= r(j, j) / mag;
  }
  return q;
}

// `nonzero` eigenvalues in [cond^{-1/2}, cond^{1/2}] followed by n - nonzero zeros.
RealVector sample_spectrum(Index n, Index nonzero, double cond, SpectrumShape shape, std::mt19937_64& rng) {
  const double lo = 1.0 / std::sqrt(cond);
  const double hi = std::sqrt(cond);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto loguniform = [&] { return std::exp(std::log(lo) + unit(rng) * (std::log(hi) - std::log(lo))); };

  RealVector lam = RealVector::Zero(n);
  switch (shape) {
    case SpectrumShape::LogUniform:
      for (Index j = 0; j < nonzero; ++j) lam(j) = loguniform();
      break;
    case SpectrumShape::Uniform:
      for (Index j = 0; j < nonzero; ++j) lam(j) = lo + unit(rng) * (hi - lo);
      break;
    case SpectrumShape::Clustered: {
      const Index levels = std::max<Index>(1, (nonzero + 2) / 3);
      std::vector<double> value(static_cast<size_t>(levels));
      for (auto& v : value) v = loguniform();
      for (Index j = 0; j < nonzero; ++j) lam(j) = value[static_cast<size_t>(j % levels)];
      if (levels >= 2) {
        // pin the extremes so the condition number is exact
        for (Index j = 0; j < nonzero; ++j) {
          if (j % levels == 0) lam(j) = hi;
          if (j % levels == 1) lam(j) = lo;
        }
      }
      return lam;
    }
  }
  if (nonzero >= 2) {
    lam(0) = hi;
    lam(1) = lo;
  }
  return lam;
}

Hermitian conjugate_spectrum(const Matrix& u, const RealVector& lam) {
  return Hermitian(u * lam.cast<Complex>().asDiagonal() * u.adjoint());
}

}  // namespace

std::string to_string(Field f) { return f == Field::Real ? "real" : "complex"; }

std::string to_string(SpectrumShape s) {
  switch (s) {
    case SpectrumShape::LogUniform: return "loguniform";
    case SpectrumShape::Uniform: return "uniform";
    case SpectrumShape::Clustered: return "clustered";
  }
  return "loguniform";
}

Field parse_field(const std::string& s) {
  if (s == "real") return Field::Real;
  if (s == "complex") return Field::Complex;
  throw DomainError("unknown field '" + s + "' (expected real|complex)");
}

SpectrumShape parse_shape(const std::string& s) {
  if (s == "loguniform") return SpectrumShape::LogUniform;
  if (s == "uniform") return SpectrumShape::Uniform;
  if (s == "clustered") return SpectrumShape::Clustered;
  throw DomainError("unknown spectrum shape '" + s + "' (expected loguniform|uniform|clustered)");
}

void GenSpec::validate() const {
  if (n < 1) throw DomainError("GenSpec: n must be >= 1");
  if (rank > n) throw DomainError("GenSpec: rank must not exceed n");
  if (!(condition >= 1.0) || !std::isfinite(condition)) throw DomainError("GenSpec: condition number must be >= 1");
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
  return splitmix64(splitmix64(master) ^ (counter * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
}

Matrix gaussian_matrix(Index rows, Index cols, Field field, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Matrix m(rows, cols);
  const double s = field == Field::Complex ? std::sqrt(0.5) : 1.0;
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) {
      const double re = nd(rng);
      const double im = field == Field::Complex ? nd(rng) : 0.0;
      m(i, j) = Complex(s * re, s * im);
    }
  }
  return m;
}

Matrix haar_unitary(Index n, std::uint64_t seed, Field field) {
  std::mt19937_64 rng(seed);
  return haar_from(n, field, rng);
}

Psd random_psd_rank(const GenSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const RealVector lam = sample_spectrum(spec.n, spec.effective_rank(), spec.condition, spec.shape, rng);
  const Matrix u = haar_from(spec.n, spec.field, rng);
  return Psd(conjugate_spectrum(u, lam));
}

Pd random_pd(const GenSpec& spec) {
  if (spec.effective_rank() != spec.n) throw DomainError("random_pd: rank must equal n");
  return Pd(random_psd_rank(spec));
}

Matrix random_nonsingular(Index n, std::uint64_t seed, Field field) {
  if (n < 1) throw DomainError("random_nonsingular: n must be >= 1");
  std::mt19937_64 rng(seed);
  for (;;) {
    Matrix g = gaussian_matrix(n, n, field, rng);
    const RealVector sv = singular_value_list(g);
    if (sv(n - 1) >= 1e-3) return g;
  }
}

PartitionedPair make_prop1_instance(Index n, Index r, std::uint64_t seed) {
  if (r < 1 || r > n) throw DomainError("make_prop1_instance: need 1 <= r <= n");
  GenSpec s11;
  s11.n = r;
  s11.condition = 10.0;
  s11.seed = derive_seed(seed, 1);
  PartitionedPair p;
  p.a11 = random_pd(s11);

  std::mt19937_64 rng(derive_seed(seed, 2));
  p.a12 = gaussian_matrix(r, n - r, Field::Complex, rng) / std::sqrt(static_cast<double>(n));

  const Matrix a11 = p.a11.matrix();
  const Psd gram(Hermitian(a11 * a11 + p.a12 * p.a12.adjoint()));
  p.x = Pd(matrix_power(gram, -0.5));

  if (n > r) {
    GenSpec s22;
    s22.n = n - r;
    s22.condition = 10.0;
    s22.seed = derive_seed(seed, 3);
    const Pd w = random_pd(s22);
    p.a22 = Hermitian(p.a12.adjoint() * inverse(a11) * p.a12).matrix() + w.matrix();
  } else {
    p.a22 = Matrix(0, 0);
  }
  return p;
}

}  // namespace matineq

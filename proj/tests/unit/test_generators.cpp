#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "matineq/generators.hpp"
#include "support.hpp"

using namespace matineq;
namespace mt = matineq::testing;

namespace {

GenSpec spec(Index n, Index rank, double cond, std::uint64_t seed) {
  GenSpec s;
  s.n = n;
  s.rank = rank;
  s.condition = cond;
  s.seed = seed;
  return s;
}

}  // namespace

TEST(RandomPd, ConditionOneIsIdentity) {
  const Pd p = random_pd(spec(5, -1, 1.0, 3));
  EXPECT_LE((p.matrix() - Matrix::Identity(5, 5)).norm(), 1e-12);
}

TEST(RandomPd, ScalarInRange) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Pd p = random_pd(spec(1, -1, 100.0, seed));
    const double v = p.matrix()(0, 0).real();
    EXPECT_GE(v, 0.1 - 1e-15);
    EXPECT_LE(v, 10.0 + 1e-14);
  }
}

TEST(RandomPd, DeterministicBitwise) {
  for (auto shape : {SpectrumShape::LogUniform, SpectrumShape::Uniform, SpectrumShape::Clustered}) {
    GenSpec s = spec(6, -1, 1e3, 42);
    s.shape = shape;
    EXPECT_EQ(random_pd(s).matrix(), random_pd(s).matrix());
  }
}

TEST(RandomPd, SpectrumAndConditionNumber) {
  for (auto shape : {SpectrumShape::LogUniform, SpectrumShape::Uniform, SpectrumShape::Clustered}) {
    for (Field field : {Field::Real, Field::Complex}) {
      GenSpec s = spec(7, -1, 1e4, 9);
      s.shape = shape;
      s.field = field;
      const RealVector ev = mt::oracle_eigenvalues(random_pd(s).matrix());
      EXPECT_NEAR(ev(0), 100.0, 1e-10);
      EXPECT_NEAR(ev(6), 0.01, 1e-12);
      if (field == Field::Real) EXPECT_EQ(random_pd(s).matrix().imag().norm(), 0.0);
    }
  }
}

TEST(RandomPd, ClusteredHasRepeatedEigenvalues) {
  GenSpec s = spec(6, -1, 10, 4);
  s.shape = SpectrumShape::Clustered;
  const RealVector ev = mt::oracle_eigenvalues(random_pd(s).matrix());
  std::set<long long> distinct;
  for (Index j = 0; j < ev.size(); ++j) distinct.insert(std::llround(ev(j) * 1e8));
  EXPECT_LE(distinct.size(), 3u);
}

TEST(RandomPd, RequiresFullRank) { EXPECT_THROW(random_pd(spec(3, 2, 10, 0)), DomainError); }

TEST(RandomPsdRank, ExactRank) {
  EXPECT_EQ(random_psd_rank(spec(4, 0, 10, 1)).matrix().norm(), 0.0);
  const Psd p = random_psd_rank(spec(2, 1, 10, 1));
  EXPECT_LE(std::abs(mt::oracle_eigenvalues(p.matrix())(1)), 1e-12);
  for (Index n = 1; n <= 9; ++n)
    for (Index r = 0; r <= n; ++r)
      EXPECT_EQ(numerical_rank(eigenvalues(random_psd_rank(spec(n, r, 1e4, 100 + n * 10 + r)))), r);
}

TEST(RandomPsdRank, FullRankMatchesRandomPd) {
  const GenSpec s = spec(5, 5, 10, 77);
  EXPECT_EQ(random_psd_rank(s).matrix(), random_pd(s).matrix());
}

TEST(GenSpec, Validation) {
  EXPECT_THROW(random_psd_rank(spec(0, -1, 10, 0)), DomainError);
  EXPECT_THROW(random_psd_rank(spec(3, 4, 10, 0)), DomainError);
  EXPECT_THROW(random_psd_rank(spec(3, 3, 0.5, 0)), DomainError);
  EXPECT_THROW(parse_field("quaternion"), DomainError);
  EXPECT_THROW(parse_shape("gaussian"), DomainError);
  EXPECT_EQ(parse_shape(to_string(SpectrumShape::Clustered)), SpectrumShape::Clustered);
  EXPECT_EQ(parse_field(to_string(Field::Real)), Field::Real);
}

TEST(RandomNonsingular, Contract) {
  const Matrix s1 = random_nonsingular(1, 5);
  EXPECT_GT(std::abs(s1(0, 0)), 0.0);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Matrix m = random_nonsingular(4, seed);
    EXPECT_GE(mt::oracle_singular_values(m)(3), 1e-3);
    EXPECT_EQ(m, random_nonsingular(4, seed));
  }
}

TEST(HaarUnitary, Contract) {
  EXPECT_NEAR(std::abs(haar_unitary(1, 3)(0, 0)), 1.0, 1e-15);
  for (Index n : {1, 2, 5, 12}) {
    const Matrix u = haar_unitary(n, 17);
    EXPECT_LE((u.adjoint() * u - Matrix::Identity(n, n)).norm(), 1e-10 * static_cast<double>(n));
    EXPECT_EQ(u, haar_unitary(n, 17));
  }
  EXPECT_EQ(haar_unitary(4, 1, Field::Real).imag().norm(), 0.0);
}

TEST(DeriveSeed, DistinctStreams) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t m = 0; m < 20; ++m)
    for (std::uint64_t c = 0; c < 200; ++c) seen.insert(derive_seed(m, c));
  EXPECT_EQ(seen.size(), 4000u);
  EXPECT_EQ(derive_seed(5, 6), derive_seed(5, 6));
}

TEST(Prop1Instance, ConstraintAndDefiniteness) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Index n = 1 + static_cast<Index>(seed % 8);
    const Index r = 1 + static_cast<Index>(seed / 8) % n;
    const PartitionedPair p = make_prop1_instance(n, r, seed);
    EXPECT_EQ(p.r(), r);
    EXPECT_EQ(p.n(), n);
    EXPECT_LE(p.constraint_residual(), p.tol_proj()) << n << " " << r;
    EXPECT_GT(mt::oracle_eigenvalues(p.assemble()).minCoeff(), 0.0);
  }
}

TEST(Prop1Instance, FullBlockGivesInverse) {
  const PartitionedPair p = make_prop1_instance(3, 3, 8);
  EXPECT_EQ(p.a12.cols(), 0);
  EXPECT_LE((p.x.matrix() - p.a11.matrix().inverse()).norm(), 1e-12);
  EXPECT_THROW(make_prop1_instance(3, 4, 0), DomainError);
  EXPECT_THROW(make_prop1_instance(3, 0, 0), DomainError);
}

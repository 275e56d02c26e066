#pragma once

// Seeded instance generators. Every generator is a pure function of its
// arguments: the same spec and seed give bitwise-identical output.

#include <cstdint>
#include <random>
#include <string>

#include "matineq/reduction.hpp"
#include "matineq/linalg.hpp"

namespace matineq {

enum class Field { Real, Complex };
enum class SpectrumShape { LogUniform, Uniform, Clustered };

std::string to_string(Field f);
std::string to_string(SpectrumShape s);
Field parse_field(const std::string& s);
SpectrumShape parse_shape(const std::string& s);

struct GenSpec {
  Index n = 4;
  /// Number of nonzero eigenvalues; negative means "full rank" (= n).
  Index rank = -1;
  /// Ratio of the extreme nonzero eigenvalues; spectrum lies in [cond^{-1/2}, cond^{1/2}].
  double condition = 10.0;
  Field field = Field::Complex;
  std::uint64_t seed = 0;
  SpectrumShape shape = SpectrumShape::LogUniform;

  Index effective_rank() const noexcept { return rank < 0 ? n : rank; }
  void validate() const;
};

/// Stream seed for trial `counter` of a run seeded with `master`
/// (SplitMix64 finalizer over the pair).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter);

/// Gaussian matrix with unit-variance entries (complex: unit variance per part).
Matrix gaussian_matrix(Index rows, Index cols, Field field, std::mt19937_64& rng);

Matrix haar_unitary(Index n, std::uint64_t seed, Field field = Field::Complex);
Pd random_pd(const GenSpec& spec);
Psd random_psd_rank(const GenSpec& spec);
/// Resamples until sigma_min >= 1e-3.
Matrix random_nonsingular(Index n, std::uint64_t seed, Field field = Field::Complex);
/// Draws A11 (PD), A12, sets X = (A11^2 + A12 A12*)^{-1/2} and
/// A22 = A12* A11^{-1} A12 + W with W PD.
PartitionedPair make_prop1_instance(Index n, Index r, std::uint64_t seed);

}  // namespace matineq

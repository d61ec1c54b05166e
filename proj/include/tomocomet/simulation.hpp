#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "tomocomet/reflectivity.hpp"
#include "tomocomet/types.hpp"

namespace tomocomet {

/// SplitMix64 finalizer; bijective 64-bit mixer.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed of trial `trial` of sweep cell `cell` under `master_seed`. Distinct
/// (cell, trial) pairs yield distinct seeds for a fixed master seed.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t cell,
                          std::uint64_t trial);

/// Standard circular complex Gaussian source: real and imaginary parts are
/// i.i.d. N(0, 1/2). Uses std::mt19937_64 (output sequence fixed by the C++
/// standard) and a Box-Muller transform, so draws are reproducible across
/// standard library implementations.
class CircularGaussian {
 public:
  explicit CircularGaussian(std::uint64_t seed) : engine_(seed) {}

  cplx operator()();

 private:
  double uniform_open();

  std::mt19937_64 engine_;
};

/// N snapshots y(t) ~ CN(0, R), stored column-wise (M x N).
struct SnapshotStack {
  CMatrix data;
  std::uint64_t seed = 0;

  int snapshots() const { return static_cast<int>(data.cols()); }
  int dimension() const { return static_cast<int>(data.rows()); }
};

enum class FactorizationPath { cholesky, cholesky_jitter, eigen_clamp };

struct CovarianceFactor {
  CMatrix L;  // R ~= L L^H
  FactorizationPath path = FactorizationPath::cholesky;
};

/// Cholesky of R; retried with diagonal jitter 1e-12 trace/M, then an
/// eigendecomposition with negative eigenvalues clamped to zero.
CovarianceFactor factor_covariance(const CMatrix& R);

SnapshotStack sample_snapshots(const CovarianceModel& R, int N,
                               std::uint64_t seed);

/// (1/N) sum_t y(t) y(t)^H, symmetrized to be exactly Hermitian.
CovarianceModel sample_covariance(const SnapshotStack& stack);

}  // namespace tomocomet

#include "tomocomet/simulation.hpp"

#include <cmath>
#include <iostream>

#include "tomocomet/error.hpp"

namespace tomocomet {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t cell,
                          std::uint64_t trial) {
  // splitmix64 is a bijection, so for a fixed master seed distinct
  // (cell, trial) pairs with trial < 2^40 map to distinct seeds.
  const std::uint64_t key = (cell << 40) ^ trial;
  return splitmix64(splitmix64(master_seed) ^ key);
}

double CircularGaussian::uniform_open() {
  // 53 random bits mapped to (0, 1).
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

cplx CircularGaussian::operator()() {
  const double u1 = uniform_open();
  const double u2 = uniform_open();
  // Box-Muller with radius scaled for per-component variance 1/2.
  const double r = std::sqrt(-std::log(u1));
  const double t = 2.0 * kPi * u2;
  return {r * std::cos(t), r * std::sin(t)};
}

namespace {

bool reconstructs(const CMatrix& L, const CMatrix& R) {
  if (!L.allFinite()) return false;
  const double scale = std::max(R.norm(), 1e-300);
  return (L * L.adjoint() - R).norm() <= 1e-8 * scale;
}

}  // namespace

CovarianceFactor factor_covariance(const CMatrix& R) {
  const int M = static_cast<int>(R.rows());
  if (R.isZero(0.0)) return {CMatrix::Zero(M, M), FactorizationPath::cholesky};

  Eigen::LLT<CMatrix> llt(R);
  if (llt.info() == Eigen::Success) {
    CMatrix L = llt.matrixL();
    if (reconstructs(L, R)) return {std::move(L), FactorizationPath::cholesky};
  }

  const double jitter = 1e-12 * std::abs(R.trace().real()) / M;
  CMatrix Rj = R;
  Rj.diagonal().array() += jitter;
  Eigen::LLT<CMatrix> llt_j(Rj);
  if (llt_j.info() == Eigen::Success) {
    CMatrix L = llt_j.matrixL();
    if (reconstructs(L, R)) return {std::move(L), FactorizationPath::cholesky_jitter};
  }

  Eigen::SelfAdjointEigenSolver<CMatrix> eig(0.5 * (R + R.adjoint()));
  const double trace = std::abs(R.trace().real());
  if (eig.eigenvalues().minCoeff() < -1e-10 * trace) {
    std::cerr << "warning: covariance is not PSD (min eigenvalue "
              << eig.eigenvalues().minCoeff() << "); clamping negative eigenvalues\n";
  }
  const RVector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  CMatrix L = eig.eigenvectors() * root.asDiagonal();
  return {std::move(L), FactorizationPath::eigen_clamp};
}

SnapshotStack sample_snapshots(const CovarianceModel& R, int N, std::uint64_t seed) {
  if (N < 1) throw Error(ErrorCode::invalid_argument, "need at least one snapshot");
  const CovarianceFactor factor = factor_covariance(R.matrix);
  const int M = R.size();
  CircularGaussian draw(seed);
  CMatrix w(M, N);
  for (int t = 0; t < N; ++t) {
    for (int m = 0; m < M; ++m) w(m, t) = draw();
  }
  return {factor.L * w, seed};
}

CovarianceModel sample_covariance(const SnapshotStack& stack) {
  const int N = stack.snapshots();
  if (N < 1) throw Error(ErrorCode::invalid_argument, "empty snapshot stack");
  CMatrix R = stack.data * stack.data.adjoint() / static_cast<double>(N);
  CMatrix H = 0.5 * (R + R.adjoint());
  return {std::move(H), CovarianceKind::sample};
}

}  // namespace tomocomet

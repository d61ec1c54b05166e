#include "tomocomet/crb.hpp"

#include <cmath>

#include "tomocomet/error.hpp"

namespace tomocomet {

std::array<CMatrix, 4> covariance_derivatives(const SourceProfile& profile,
                                              const ArrayConfig& array,
                                              double sigma_eps2) {
  profile.validate();
  if (!(sigma_eps2 >= 0.0)) {
    throw Error(ErrorCode::invalid_argument, "noise power must be non-negative");
  }
  const int M = array.size();
  const CVector a = steering_vector(array, profile.z0);
  const CMatrix modulation = a * a.adjoint();
  const CMatrix B = shape_matrix(profile, array);

  CMatrix dB = CMatrix::Zero(M, M);
  CMatrix dk(M, M);
  for (int m = 0; m < M; ++m) {
    for (int n = 0; n < M; ++n) {
      const double xi = array.kz(n) - array.kz(m);
      dk(n, m) = cplx(0.0, xi);
      if (n != m) dB(n, m) = characteristic_function_dsigma(profile, xi);
    }
  }

  const CMatrix dP = B.cwiseProduct(modulation);
  return {profile.P * dP.cwiseProduct(dk), profile.P * dB.cwiseProduct(modulation), dP,
          CMatrix::Identity(M, M)};
}

RMatrix fisher_information(const SourceProfile& profile, const ArrayConfig& array,
                           double sigma_eps2, int N) {
  if (N < 1) throw Error(ErrorCode::invalid_argument, "N must be positive");
  const CMatrix R = true_covariance(profile, array, sigma_eps2).matrix;
  Eigen::LDLT<CMatrix> ldlt(R);
  if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-14) {
    throw Error(ErrorCode::singular_fim, "covariance is not invertible");
  }
  const auto dR = covariance_derivatives(profile, array, sigma_eps2);
  std::array<CMatrix, 4> RinvD;
  for (std::size_t i = 0; i < 4; ++i) RinvD[i] = ldlt.solve(dR[i]);

  RMatrix F(4, 4);
  for (int i = 0; i < 4; ++i) {
    for (int k = i; k < 4; ++k) {
      const auto& A = RinvD[static_cast<std::size_t>(i)];
      const auto& C = RinvD[static_cast<std::size_t>(k)];
      const double v = N * A.cwiseProduct(C.transpose()).sum().real();
      F(i, k) = v;
      F(k, i) = v;
    }
  }
  return F;
}

CrbResult crb_stddev(const RMatrix& fim, int N) {
  if (fim.rows() != 4 || fim.cols() != 4 || !fim.allFinite()) {
    throw Error(ErrorCode::singular_fim, "Fisher information must be a finite 4x4 matrix");
  }
  Eigen::SelfAdjointEigenSolver<RMatrix> eig(fim);
  const RVector& lambda = eig.eigenvalues();
  if (!(lambda.minCoeff() > 1e-13 * lambda.cwiseAbs().maxCoeff())) {
    throw Error(ErrorCode::singular_fim, "Fisher information is singular");
  }
  const RMatrix& V = eig.eigenvectors();
  CrbResult out;
  out.N = N;
  for (int i = 0; i < 4; ++i) {
    double var = 0.0;
    for (int k = 0; k < 4; ++k) var += V(i, k) * V(i, k) / lambda(k);
    out.stddev[static_cast<std::size_t>(i)] = std::sqrt(var);
  }
  return out;
}

CrbResult cramer_rao_bound(const SourceProfile& profile, const ArrayConfig& array,
                           double sigma_eps2, int N) {
  return crb_stddev(fisher_information(profile, array, sigma_eps2, N), N);
}

}  // namespace tomocomet

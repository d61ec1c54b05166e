#pragma once

#include <array>
#include <string>

#include "tomocomet/array_geometry.hpp"
#include "tomocomet/reflectivity.hpp"
#include "tomocomet/types.hpp"

namespace tomocomet {

/// Parameter order of the bound: (z0, sigma_z, P, sigma_eps2).
inline const std::array<std::string, 4> kCrbParameters = {"z0", "sigma_z", "P",
                                                          "sigma_eps2"};

/// Analytic dR/dtheta for theta = (z0, sigma_z, P, sigma_eps2).
std::array<CMatrix, 4> covariance_derivatives(const SourceProfile& profile,
                                              const ArrayConfig& array,
                                              double sigma_eps2);

/// Slepian-Bangs Fisher information of N circular Gaussian snapshots:
/// F_ij = N tr(R^-1 dR_i R^-1 dR_j).
RMatrix fisher_information(const SourceProfile& profile,
                           const ArrayConfig& array, double sigma_eps2, int N);

struct CrbResult {
  std::array<double, 4> stddev{};
  int N = 0;

  double operator[](std::size_t i) const { return stddev[i]; }
};

/// sqrt(diag(F^-1)). Throws Error(singular_fim) if F is not invertible.
CrbResult crb_stddev(const RMatrix& fim, int N);

CrbResult cramer_rao_bound(const SourceProfile& profile,
                           const ArrayConfig& array, double sigma_eps2, int N);

}  // namespace tomocomet

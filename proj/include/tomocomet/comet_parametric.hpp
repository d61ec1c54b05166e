#pragma once

#include "tomocomet/array_geometry.hpp"
#include "tomocomet/reflectivity.hpp"
#include "tomocomet/types.hpp"

namespace tomocomet {

struct SpreadGrid {
  double min = 0.0;
  /// Negative selects 0.3 z_amb.
  double max = -1.0;
  int points = 64;
};

/// Covariance matching with an assumed shape family for p. (P, sigma_eps2)
/// are concentrated out; (z0, sigma_z) are searched on a grid and polished
/// with Nelder-Mead.
struct ParametricEstimatorConfig {
  Shape assumed_shape = Shape::uniform;
  Weighting weighting = Weighting::inverse_sample;
  /// 0 selects the same default as the moment estimator.
  int z0_grid = 0;
  SpreadGrid sigma_grid;
  /// 0 selects 1e-9 z_amb.
  double refine_tol = 0.0;

  void validate(const ArrayConfig& array) const;
};

struct ParametricEstimate {
  double z0_hat = 0.0;
  double sigma_z_hat = 0.0;
  double P_hat = 0.0;
  double sigma_eps2_hat = 0.0;
  double cost = 0.0;
  bool weighting_loaded = false;
};

/// Best (P, sigma_eps2) and the residual cost at fixed (z0, sigma_z).
struct ParametricFit {
  double P = 0.0;
  double sigma_eps2 = 0.0;
  double cost = 0.0;
};

ParametricFit fit_power_and_noise(const CMatrix& R_bar, const CMatrix& W,
                                  Shape shape, double z0, double sigma_z,
                                  const ArrayConfig& array);

ParametricEstimate estimate_parametric(const CovarianceModel& R_bar,
                                       const ParametricEstimatorConfig& config,
                                       const ArrayConfig& array);

}  // namespace tomocomet

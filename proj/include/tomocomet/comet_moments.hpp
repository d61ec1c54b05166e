#pragma once

#include <string>
#include <vector>

#include "tomocomet/array_geometry.hpp"
#include "tomocomet/reflectivity.hpp"
#include "tomocomet/types.hpp"

namespace tomocomet {

struct HeightSearch {
  /// 0 selects max(8 M, ceil(z_amb / (dz / 16))) with dz the Fourier
  /// resolution.
  int grid_points = 0;
  /// 0 selects 1e-9 z_amb.
  double refine_tol = 0.0;
};

/// Moment-based covariance matching. The shape spectrum is modelled by its
/// Taylor expansion p^(xi) ~ 1 + sum_{d=2..D} (j^d / d!) mu_d xi^d, keeping
/// only even orders when `symmetric` is set.
struct MomentEstimatorConfig {
  /// Order 4 leaves a visible truncation bias on uniform sources already at
  /// sigma_z / z_amb = 5 %; order 6 keeps it below 0.2 % up to ~9 %.
  int D = 6;
  bool symmetric = true;
  Weighting weighting = Weighting::inverse_sample;
  HeightSearch z0_search;

  void validate(const ArrayConfig& array) const;

  /// Moment orders carried by the model, ascending.
  std::vector<int> orders() const;
};

/// Regressor matrices of the linear parameters alpha = (P, sigma_eps2,
/// nu_d...). Column i of J is vec(columns[i]); every column is Hermitian.
struct Regressors {
  std::vector<int> orders;
  std::vector<CMatrix> columns;

  int count() const { return static_cast<int>(columns.size()); }
  std::vector<std::string> names() const;

  /// Dense M^2 x count J, column-major vec. Intended for checks only.
  CMatrix vectorized() const;
};

Regressors build_regressors(const MomentEstimatorConfig& config,
                            const ArrayConfig& array);

struct WeightMatrix {
  CMatrix W;
  /// Diagonal loading 1e-8 trace/M was applied (condition number > 1e12).
  bool loaded = false;
};

/// W = I or W = R^-1. Throws Error(degenerate_covariance) for a zero R.
WeightMatrix weighting(const CovarianceModel& R_bar, Weighting choice);

/// Normal equations of the cost at fixed height z:
///   y_i  = tr(G_i W R W),  Y_ik = tr(G_i W G_k W),  G_i = Phi(z) H_i Phi(z)^H
/// which is (Psi J)^H (W^T (x) W) vec(R) and (Psi J)^H (W^T (x) W) Psi J
/// evaluated without forming Kronecker products.
struct NormalEquations {
  RMatrix Y;
  RVector y;
  /// Largest |imaginary part| of the assembled entries relative to the
  /// largest modulus; zero analytically.
  double imag_residue = 0.0;
};

NormalEquations assemble_normal_equations(double z, const CMatrix& R_bar,
                                          const Regressors& J,
                                          const CMatrix& W,
                                          const ArrayConfig& array);

struct AlphaSolution {
  RVector alpha;
  /// y^T Y^-1 y.
  double objective = 0.0;
  /// Some eigenvalues of the equilibrated Y fell below 1e-12 relative and
  /// were dropped from the pseudo-inverse.
  bool pseudo_inverse = false;
};

AlphaSolution solve_normal_equations(const NormalEquations& eq);

/// y(z)^H Y(z)^-1 y(z); maximized at the height estimate.
double concentrated_objective(double z, const CMatrix& R_bar,
                              const Regressors& J, const CMatrix& W,
                              const ArrayConfig& array);

/// Closed-form minimizer of the cost over alpha at height z.
AlphaSolution solve_alpha(double z, const CMatrix& R_bar, const Regressors& J,
                          const CMatrix& W, const ArrayConfig& array);

/// R^(z, alpha) = Phi(z) (sum_i alpha_i H_i) Phi(z)^H.
CMatrix model_covariance(double z, const RVector& alpha, const Regressors& J,
                         const ArrayConfig& array);

/// || W^{1/2} (R_bar - R_hat) W^{1/2} ||_F^2 = tr(E W E^H W) for Hermitian W.
double covariance_matching_cost(const CMatrix& R_bar, const CMatrix& R_hat,
                                const CMatrix& W);

struct MomentDiagnostics {
  bool clamped_sigma = false;
  double grid_resolution_used = 0.0;
  bool weighting_loaded = false;
  bool pseudo_inverse = false;
};

struct MomentEstimate {
  double z0_hat = 0.0;
  double P_hat = 0.0;
  double sigma_eps2_hat = 0.0;
  /// nu_d = P mu_d for d = 2..D at index d - 2; orders outside the model
  /// (odd ones in the symmetric variant) are zero.
  RVector nu;
  double sigma_z_hat = 0.0;
  double cost = 0.0;
  MomentDiagnostics diagnostics;

  int max_order() const { return static_cast<int>(nu.size()) + 1; }
  /// mu_d = nu_d / P.
  double moment(int d) const;
};

MomentEstimate estimate_moments(const CovarianceModel& R_bar,
                                const MomentEstimatorConfig& config,
                                const ArrayConfig& array);

/// Fitted shape spectrum P p^(xi, mu) = P + sum_d (j^d / d!) nu_d xi^d.
cplx moment_spectrum(const MomentEstimate& estimate, double xi);

}  // namespace tomocomet

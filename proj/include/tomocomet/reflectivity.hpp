#pragma once

#include <string_view>

#include "tomocomet/array_geometry.hpp"
#include "tomocomet/types.hpp"

namespace tomocomet {

enum class Shape { point, uniform, gaussian };

std::string_view to_string(Shape shape);
Shape shape_from_string(std::string_view name);

/// Vertical reflectivity f(z) = P * p(z - z0), with p a unit-mass, zero-mean
/// shape of standard deviation sigma_z. The uniform family is parametrized by
/// its standard deviation: support [-a, a] with a = sigma_z * sqrt(3).
struct SourceProfile {
  Shape shape = Shape::uniform;
  double z0 = 0.0;
  double sigma_z = 0.0;
  double P = 1.0;

  /// Throws Error(invalid_argument) when the invariants do not hold.
  void validate() const;
};

/// p(z) of the centered shape (a point source has no density; returns 0).
double shape_density(const SourceProfile& profile, double z);

/// p^(xi) = integral p(z) exp(j xi z) dz. Real for every supported shape.
double characteristic_function(const SourceProfile& profile, double xi);

/// d p^(xi) / d sigma_z.
double characteristic_function_dsigma(const SourceProfile& profile, double xi);

/// mu_d = integral z^d p(z) dz.
double central_moment(const SourceProfile& profile, int d);

enum class CovarianceKind { true_model, sample, reconstructed };

/// An M x M Hermitian covariance tagged with where it came from.
struct CovarianceModel {
  CMatrix matrix;
  CovarianceKind kind = CovarianceKind::true_model;

  int size() const { return static_cast<int>(matrix.rows()); }
};

/// Checks the Hermitian (1e-10 relative) and, for true and sample kinds, the
/// PSD invariant (eigenvalues >= -1e-10 trace).
bool is_valid_covariance(const CovarianceModel& cov);

/// B_{n,m} = p^(kz_n - kz_m).
CMatrix shape_matrix(const SourceProfile& profile, const ArrayConfig& config);

/// R = a(z0) a(z0)^H .* P B + sigma_eps2 I.
CovarianceModel true_covariance(const SourceProfile& profile,
                                const ArrayConfig& config, double sigma_eps2);

}  // namespace tomocomet

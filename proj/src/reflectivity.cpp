#include "tomocomet/reflectivity.hpp"

#include <cmath>
#include <string>

#include "tomocomet/error.hpp"

namespace tomocomet {

namespace {

const double kSqrt3 = std::sqrt(3.0);

double uniform_half_width(const SourceProfile& p) { return p.sigma_z * kSqrt3; }

}  // namespace

std::string_view to_string(Shape shape) {
  switch (shape) {
    case Shape::point: return "point";
    case Shape::uniform: return "uniform";
    case Shape::gaussian: return "gaussian";
  }
  return "unknown";
}

Shape shape_from_string(std::string_view name) {
  if (name == "point") return Shape::point;
  if (name == "uniform") return Shape::uniform;
  if (name == "gaussian") return Shape::gaussian;
  throw Error(ErrorCode::invalid_argument, "unknown shape '" + std::string(name) + "'");
}

void SourceProfile::validate() const {
  if (!(P > 0.0) || !std::isfinite(P)) {
    throw Error(ErrorCode::invalid_argument, "source power P must be positive");
  }
  if (!(sigma_z >= 0.0) || !std::isfinite(sigma_z)) {
    throw Error(ErrorCode::invalid_argument, "sigma_z must be non-negative");
  }
  if (!std::isfinite(z0)) {
    throw Error(ErrorCode::invalid_argument, "z0 must be finite");
  }
  if (shape == Shape::point && sigma_z != 0.0) {
    throw Error(ErrorCode::invalid_argument, "a point source has sigma_z = 0");
  }
}

double shape_density(const SourceProfile& profile, double z) {
  const double s = profile.sigma_z;
  switch (profile.shape) {
    case Shape::point:
      return 0.0;
    case Shape::gaussian:
      if (s == 0.0) return 0.0;
      return std::exp(-0.5 * z * z / (s * s)) / (s * std::sqrt(2.0 * kPi));
    case Shape::uniform: {
      const double a = uniform_half_width(profile);
      if (a == 0.0) return 0.0;
      return std::abs(z) <= a ? 0.5 / a : 0.0;
    }
  }
  return 0.0;
}

double characteristic_function(const SourceProfile& profile, double xi) {
  switch (profile.shape) {
    case Shape::point:
      return 1.0;
    case Shape::gaussian: {
      const double s = profile.sigma_z * xi;
      return std::exp(-0.5 * s * s);
    }
    case Shape::uniform: {
      const double x = uniform_half_width(profile) * xi;
      if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0 + x * x * x * x / 120.0;
      return std::sin(x) / x;
    }
  }
  return 1.0;
}

double characteristic_function_dsigma(const SourceProfile& profile, double xi) {
  switch (profile.shape) {
    case Shape::point:
      return 0.0;
    case Shape::gaussian: {
      const double s = profile.sigma_z;
      return -s * xi * xi * std::exp(-0.5 * s * s * xi * xi);
    }
    case Shape::uniform: {
      // d/da sinc(a xi) = xi (x cos x - sin x) / x^2 with x = a xi; a = sqrt(3) sigma.
      const double x = uniform_half_width(profile) * xi;
      double g;
      if (std::abs(x) < 1e-3) {
        g = -x / 3.0 + x * x * x / 30.0;
      } else {
        g = (x * std::cos(x) - std::sin(x)) / (x * x);
      }
      return kSqrt3 * xi * g;
    }
  }
  return 0.0;
}

double central_moment(const SourceProfile& profile, int d) {
  if (d < 0) {
    throw Error(ErrorCode::invalid_argument, "moment order must be non-negative");
  }
  if (d == 0) return 1.0;
  if (d % 2 == 1) return 0.0;
  switch (profile.shape) {
    case Shape::point:
      return 0.0;
    case Shape::gaussian: {
      double double_factorial = 1.0;
      for (int k = d - 1; k > 1; k -= 2) double_factorial *= k;
      return std::pow(profile.sigma_z, d) * double_factorial;
    }
    case Shape::uniform:
      return std::pow(uniform_half_width(profile), d) / (d + 1);
  }
  return 0.0;
}

bool is_valid_covariance(const CovarianceModel& cov) {
  const CMatrix& R = cov.matrix;
  if (R.rows() != R.cols() || R.rows() == 0) return false;
  if (!R.allFinite()) return false;
  const double scale = std::max(R.norm(), 1e-300);
  if ((R - R.adjoint()).norm() > 1e-10 * scale) return false;
  if (cov.kind == CovarianceKind::reconstructed) return true;
  const CMatrix H = 0.5 * (R + R.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(H, Eigen::EigenvaluesOnly);
  const double trace = H.trace().real();
  return eig.eigenvalues().minCoeff() >= -1e-10 * std::abs(trace);
}

CMatrix shape_matrix(const SourceProfile& profile, const ArrayConfig& config) {
  const int M = config.size();
  CMatrix B(M, M);
  for (int m = 0; m < M; ++m) {
    B(m, m) = 1.0;
    for (int n = m + 1; n < M; ++n) {
      const double v = characteristic_function(profile, config.kz(n) - config.kz(m));
      B(n, m) = v;
      B(m, n) = v;
    }
  }
  return B;
}

CovarianceModel true_covariance(const SourceProfile& profile,
                                const ArrayConfig& config, double sigma_eps2) {
  profile.validate();
  if (!(sigma_eps2 >= 0.0) || !std::isfinite(sigma_eps2)) {
    throw Error(ErrorCode::invalid_argument, "noise power must be non-negative");
  }
  const int M = config.size();
  CMatrix R(M, M);
  for (int m = 0; m < M; ++m) {
    R(m, m) = profile.P + sigma_eps2;
    for (int n = m + 1; n < M; ++n) {
      const double dk = config.kz(n) - config.kz(m);
      const cplx v = profile.P * characteristic_function(profile, dk) *
                     std::polar(1.0, dk * profile.z0);
      R(n, m) = v;
      R(m, n) = std::conj(v);
    }
  }
  return {std::move(R), CovarianceKind::true_model};
}

}  // namespace tomocomet

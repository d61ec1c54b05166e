#include "tomocomet/array_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tomocomet/error.hpp"

namespace tomocomet {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::degenerate_covariance: return "degenerate-covariance";
    case ErrorCode::singular_fim: return "singular-fim";
    case ErrorCode::io_error: return "io-error";
    case ErrorCode::estimator_failure: return "estimator-failure";
  }
  return "unknown";
}

namespace {

// Approximate gcd of the baselines; returns 0 when they are not commensurate
// at a resolution of 1e-3 of the span.
double commensurate_step(const std::vector<double>& kz) {
  const double span = kz.back() - kz.front();
  const double tol = 1e-9 * span;
  double g = 0.0;
  for (std::size_t n = 1; n < kz.size(); ++n) {
    double a = kz[n] - kz.front();
    double b = g;
    if (b == 0.0) {
      g = a;
      continue;
    }
    if (a < b) std::swap(a, b);
    while (b > tol) {
      double r = std::fmod(a, b);
      if (b - r <= tol) r = 0.0;
      a = b;
      b = r;
    }
    g = a;
    if (g < 1e-3 * span) return 0.0;
  }
  return g;
}

}  // namespace

ArrayConfig::ArrayConfig(std::vector<double> kz, std::optional<double> ambiguity)
    : kz_(std::move(kz)), ambiguity_(0.0) {
  if (kz_.size() < 2) {
    throw Error(ErrorCode::invalid_argument, "array needs at least 2 wavenumbers");
  }
  for (std::size_t n = 0; n < kz_.size(); ++n) {
    if (!std::isfinite(kz_[n])) {
      throw Error(ErrorCode::invalid_argument, "wavenumbers must be finite");
    }
    if (n > 0 && !(kz_[n] > kz_[n - 1])) {
      throw Error(ErrorCode::invalid_argument,
                  "wavenumbers must be strictly increasing");
    }
  }
  if (ambiguity) {
    if (!(*ambiguity > 0.0) || !std::isfinite(*ambiguity)) {
      throw Error(ErrorCode::invalid_argument, "ambiguity must be positive");
    }
    ambiguity_ = *ambiguity;
  } else if (double g = commensurate_step(kz_); g > 0.0) {
    ambiguity_ = 2.0 * kPi / g;
  } else {
    ambiguity_ = static_cast<double>(kz_.size()) * 2.0 * kPi / span();
  }
}

ArrayConfig make_uniform_array(int M, double z_amb) {
  if (M < 2) {
    throw Error(ErrorCode::invalid_argument, "uniform array needs M >= 2");
  }
  if (!(z_amb > 0.0) || !std::isfinite(z_amb)) {
    throw Error(ErrorCode::invalid_argument, "z_amb must be positive");
  }
  std::vector<double> kz(static_cast<std::size_t>(M));
  for (int n = 0; n < M; ++n) kz[static_cast<std::size_t>(n)] = 2.0 * kPi * n / z_amb;
  return ArrayConfig(std::move(kz), z_amb);
}

double fourier_resolution(const ArrayConfig& config) {
  return 2.0 * kPi / config.span();
}

double nominal_resolution(const ArrayConfig& config) {
  return config.ambiguity() / config.size();
}

CVector steering_vector(const ArrayConfig& config, double z) {
  CVector a(config.size());
  for (int n = 0; n < config.size(); ++n) a(n) = std::polar(1.0, config.kz(n) * z);
  return a;
}

RMatrix difference_power_matrix(const ArrayConfig& config, int d) {
  if (d < 0 || d > kMaxDifferenceOrder) {
    std::ostringstream msg;
    msg << "difference order must lie in [0, " << kMaxDifferenceOrder << "], got " << d;
    throw Error(ErrorCode::invalid_argument, msg.str());
  }
  const int M = config.size();
  RMatrix U(M, M);
  for (int m = 0; m < M; ++m) {
    for (int n = 0; n < M; ++n) {
      // pow(0, 0) == 1 keeps the d = 0 diagonal at one.
      U(n, m) = std::pow(config.kz(n) - config.kz(m), d);
    }
  }
  return U;
}

double wrap_height(const ArrayConfig& config, double z) {
  const double period = config.ambiguity();
  double w = std::fmod(z, period);
  if (w < 0.0) w += period;
  if (w >= period) w -= period;
  return w;
}

double circular_distance(const ArrayConfig& config, double a, double b) {
  const double d = std::abs(wrap_height(config, a - b));
  return std::min(d, config.ambiguity() - d);
}

}  // namespace tomocomet

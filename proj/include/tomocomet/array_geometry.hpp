#pragma once

#include <optional>
#include <vector>

#include "tomocomet/types.hpp"

namespace tomocomet {

/// Tomographic acquisition geometry: the vertical interferometric
/// wavenumbers of the M passes (rad/m, strictly increasing) and the height
/// ambiguity they induce.
class ArrayConfig {
 public:
  /// Explicit wavenumbers. When `ambiguity` is omitted it is derived as
  /// 2*pi / gcd(kz_n - kz_0) if the baselines are commensurate, otherwise
  /// approximated by M * fourier_resolution (quasi-uniform arrays).
  explicit ArrayConfig(std::vector<double> kz,
                       std::optional<double> ambiguity = std::nullopt);

  int size() const noexcept { return static_cast<int>(kz_.size()); }
  const std::vector<double>& kz() const noexcept { return kz_; }
  double kz(int n) const { return kz_.at(static_cast<std::size_t>(n)); }

  /// Smallest height period of the steering vectors (m).
  double ambiguity() const noexcept { return ambiguity_; }

  double span() const noexcept { return kz_.back() - kz_.front(); }

 private:
  std::vector<double> kz_;
  double ambiguity_;
};

/// kz_n = 2*pi*n / z_amb, n = 0..M-1.
ArrayConfig make_uniform_array(int M, double z_amb);

/// 2*pi / (max kz - min kz).
double fourier_resolution(const ArrayConfig& config);

/// The quasi-uniform rule of thumb z_amb / M.
double nominal_resolution(const ArrayConfig& config);

/// a(z)_n = exp(j kz_n z).
CVector steering_vector(const ArrayConfig& config, double z);

inline constexpr int kMaxDifferenceOrder = 12;

/// U(d)_{n,m} = (kz_n - kz_m)^d, 0 <= d <= kMaxDifferenceOrder.
RMatrix difference_power_matrix(const ArrayConfig& config, int d);

/// Wraps a height onto [0, ambiguity).
double wrap_height(const ArrayConfig& config, double z);

/// Distance between two heights on the circle of circumference ambiguity.
double circular_distance(const ArrayConfig& config, double a, double b);

}  // namespace tomocomet

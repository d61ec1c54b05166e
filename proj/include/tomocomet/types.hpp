#pragma once

#include <complex>

#include <Eigen/Dense>

namespace tomocomet {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kJ{0.0, 1.0};

/// Weighting matrix choice of the covariance-matching cost.
enum class Weighting { identity, inverse_sample };

}  // namespace tomocomet

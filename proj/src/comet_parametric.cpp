#include "tomocomet/comet_parametric.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "tomocomet/comet_moments.hpp"
#include "tomocomet/error.hpp"
#include "tomocomet/search.hpp"

namespace tomocomet {

namespace {

struct HeightTerms {
  CMatrix Q;   // conj(a_n) a_m
  CMatrix S;   // W .* Q
  CMatrix T;   // W R W .* Q
  CMatrix SS;  // S S
};

HeightTerms height_terms(const CMatrix& W, const CMatrix& WRW,
                         const ArrayConfig& array, double z0) {
  const CVector a = steering_vector(array, z0);
  HeightTerms h;
  h.Q = a.conjugate() * a.transpose();
  h.S = W.cwiseProduct(h.Q);
  h.T = WRW.cwiseProduct(h.Q);
  h.SS = h.S * h.S;
  return h;
}

cplx trace_product(const CMatrix& A, const CMatrix& B) {
  return A.cwiseProduct(B.transpose()).sum();
}

// 2x2 weighted least squares for (P, sigma_eps2) with regressors B and I.
struct TwoColumnSolution {
  double P = 0.0, noise = 0.0, objective = 0.0;
};

TwoColumnSolution solve_two_columns(const CMatrix& B, const HeightTerms& h,
                                    double trace_WW, double trace_WRW) {
  const CMatrix BS = B * h.S;
  const double ypp = trace_product(BS, BS).real();
  const double ypn = trace_product(B, h.SS).real();
  const double ynn = trace_WW;
  const double yp = trace_product(B, h.T).real();
  const double yn = trace_WRW;
  // Equilibrated Cramer's rule.
  const double sp = ypp > 0.0 ? 1.0 / std::sqrt(ypp) : 1.0;
  const double sn = ynn > 0.0 ? 1.0 / std::sqrt(ynn) : 1.0;
  const double a = ypp * sp * sp, b = ypn * sp * sn, d = ynn * sn * sn;
  const double u = yp * sp, v = yn * sn;
  const double det = a * d - b * b;
  TwoColumnSolution out;
  if (std::abs(det) <= 1e-14) {
    out.P = (a > 0.0 ? u / a : 0.0) * sp;
    out.noise = 0.0;
  } else {
    out.P = (d * u - b * v) / det * sp;
    out.noise = (a * v - b * u) / det * sn;
  }
  out.objective = out.P * yp + out.noise * yn;
  return out;
}

CMatrix spread_shape_matrix(Shape shape, double sigma, const ArrayConfig& array) {
  SourceProfile p{shape, 0.0, std::abs(sigma), 1.0};
  return shape_matrix(p, array);
}

}  // namespace

void ParametricEstimatorConfig::validate(const ArrayConfig& array) const {
  if (assumed_shape == Shape::point) {
    throw Error(ErrorCode::invalid_argument,
                "parametric estimator needs a uniform or gaussian shape");
  }
  if (z0_grid != 0 && z0_grid < 2) {
    throw Error(ErrorCode::invalid_argument, "z0 grid must not be empty");
  }
  const double max = sigma_grid.max < 0.0 ? 0.3 * array.ambiguity() : sigma_grid.max;
  if (sigma_grid.min < 0.0 || sigma_grid.points < 1 || max < sigma_grid.min) {
    throw Error(ErrorCode::invalid_argument, "invalid sigma grid");
  }
  if (refine_tol < 0.0) {
    throw Error(ErrorCode::invalid_argument, "refine_tol must be non-negative");
  }
}

ParametricFit fit_power_and_noise(const CMatrix& R_bar, const CMatrix& W, Shape shape,
                                  double z0, double sigma_z, const ArrayConfig& array) {
  const CMatrix WRW = W * R_bar * W;
  const HeightTerms h = height_terms(W, WRW, array, z0);
  const CMatrix B = spread_shape_matrix(shape, sigma_z, array);
  const TwoColumnSolution s =
      solve_two_columns(B, h, trace_product(W, W).real(), WRW.trace().real());
  const int M = array.size();
  const CMatrix R_hat =
      s.P * B.cwiseProduct(h.Q.conjugate()) + s.noise * CMatrix::Identity(M, M);
  return {s.P, s.noise, covariance_matching_cost(R_bar, R_hat, W)};
}

ParametricEstimate estimate_parametric(const CovarianceModel& R_bar,
                                       const ParametricEstimatorConfig& config,
                                       const ArrayConfig& array) {
  config.validate(array);
  if (R_bar.size() != array.size()) {
    throw Error(ErrorCode::invalid_argument, "covariance size does not match the array");
  }
  const WeightMatrix weight = weighting(R_bar, config.weighting);
  const CMatrix& W = weight.W;
  const CMatrix WRW = W * R_bar.matrix * W;
  const double trace_WW = trace_product(W, W).real();
  const double trace_WRW = WRW.trace().real();

  const double z_amb = array.ambiguity();
  int z_points = config.z0_grid;
  if (z_points == 0) {
    const double cell = fourier_resolution(array) / 16.0;
    z_points = std::max(8 * array.size(),
                        static_cast<int>(std::ceil(z_amb / cell - 1e-9)));
  }
  const double z_step = z_amb / z_points;
  const double s_min = config.sigma_grid.min;
  const double s_max = config.sigma_grid.max < 0.0 ? 0.3 * z_amb : config.sigma_grid.max;
  const int s_points = config.sigma_grid.points;
  const double s_step = s_points > 1 ? (s_max - s_min) / (s_points - 1) : 0.0;

  std::vector<CMatrix> shapes;
  shapes.reserve(static_cast<std::size_t>(s_points));
  for (int k = 0; k < s_points; ++k) {
    shapes.push_back(spread_shape_matrix(config.assumed_shape, s_min + k * s_step, array));
  }

  double best_value = -std::numeric_limits<double>::infinity();
  int best_z = 0, best_s = 0;
  for (int i = 0; i < z_points; ++i) {
    const HeightTerms h = height_terms(W, WRW, array, i * z_step);
    for (int k = 0; k < s_points; ++k) {
      const TwoColumnSolution fit =
          solve_two_columns(shapes[static_cast<std::size_t>(k)], h, trace_WW, trace_WRW);
      // Negative powers are unphysical; on uniform arrays they also alias the
      // uniform family onto a half-ambiguity-shifted wider support.
      if (fit.P < 0.0) continue;
      const double value = fit.objective;
      if (value > best_value) {
        best_value = value;
        best_z = i;
        best_s = k;
      }
    }
  }

  // sigma enters only through |sigma|, so the reflected objective is smooth
  // across the sigma = 0 boundary.
  auto residual = [&](const std::array<double, 2>& x) {
    if (std::abs(x[1]) > s_max) return std::numeric_limits<double>::infinity();
    const ParametricFit fit =
        fit_power_and_noise(R_bar.matrix, W, config.assumed_shape, x[0], x[1], array);
    return fit.P < 0.0 ? std::numeric_limits<double>::infinity() : fit.cost;
  };
  const double tol = config.refine_tol > 0.0 ? config.refine_tol : 1e-9 * z_amb;
  if (!std::isfinite(best_value)) {
    throw Error(ErrorCode::estimator_failure, "no admissible (P >= 0) grid cell");
  }
  const double s_probe = s_step > 0.0 ? s_step : 0.01 * z_amb;
  const PlanarMinimum polished = nelder_mead_minimize(
      residual, {best_z * z_step, s_min + best_s * s_step}, {z_step, s_probe}, {tol, tol});

  const ParametricFit fit = fit_power_and_noise(
      R_bar.matrix, W, config.assumed_shape, polished.x[0], polished.x[1], array);
  ParametricEstimate est;
  est.z0_hat = wrap_height(array, polished.x[0]);
  est.sigma_z_hat = std::abs(polished.x[1]);
  est.P_hat = fit.P;
  est.sigma_eps2_hat = fit.sigma_eps2;
  est.cost = fit.cost;
  est.weighting_loaded = weight.loaded;
  return est;
}

}  // namespace tomocomet

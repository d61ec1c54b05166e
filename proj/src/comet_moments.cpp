#include "tomocomet/comet_moments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tomocomet/error.hpp"
#include "tomocomet/search.hpp"

namespace tomocomet {

namespace {

cplx j_power(int d) {
  switch (d % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

double factorial(int d) {
  double f = 1.0;
  for (int k = 2; k <= d; ++k) f *= k;
  return f;
}

// Q_{n,m} = conj(a_n) a_m, so that Phi^H X Phi = X .* Q.
CMatrix phase_matrix(const ArrayConfig& array, double z) {
  const CVector a = steering_vector(array, z);
  return a.conjugate() * a.transpose();
}

int default_grid_points(const ArrayConfig& array) {
  const double cell = fourier_resolution(array) / 16.0;
  const int by_resolution = static_cast<int>(std::ceil(array.ambiguity() / cell - 1e-9));
  return std::max(8 * array.size(), by_resolution);
}

// Cost pieces that do not depend on the height.
class MatchingProblem {
 public:
  MatchingProblem(const CMatrix& R_bar, const Regressors& J, const CMatrix& W,
                  const ArrayConfig& array)
      : R_bar_(R_bar), J_(J), W_(W), WRW_(W * R_bar * W), array_(array) {}

  NormalEquations normal_equations(double z) const {
    const int K = J_.count();
    const CMatrix Q = phase_matrix(array_, z);
    const CMatrix S = W_.cwiseProduct(Q);
    const CMatrix T = WRW_.cwiseProduct(Q);

    std::vector<CMatrix> X;
    X.reserve(static_cast<std::size_t>(K));
    for (const CMatrix& H : J_.columns) X.push_back(H * S);

    NormalEquations eq{RMatrix(K, K), RVector(K), 0.0};
    double max_imag = 0.0, max_abs = 0.0;
    auto take = [&](cplx v) {
      max_imag = std::max(max_imag, std::abs(v.imag()));
      max_abs = std::max(max_abs, std::abs(v));
      return v.real();
    };
    for (int i = 0; i < K; ++i) {
      const CMatrix& Hi = J_.columns[static_cast<std::size_t>(i)];
      eq.y(i) = take(Hi.cwiseProduct(T.transpose()).sum());
      for (int k = i; k < K; ++k) {
        const auto& Xi = X[static_cast<std::size_t>(i)];
        const auto& Xk = X[static_cast<std::size_t>(k)];
        const double v = take(Xi.cwiseProduct(Xk.transpose()).sum());
        eq.Y(i, k) = v;
        eq.Y(k, i) = v;
      }
    }
    eq.imag_residue = max_abs > 0.0 ? max_imag / max_abs : 0.0;
    return eq;
  }

  double residual_cost(double z, const RVector& alpha) const {
    return covariance_matching_cost(R_bar_, model_covariance(z, alpha, J_, array_), W_);
  }

 private:
  const CMatrix& R_bar_;
  const Regressors& J_;
  const CMatrix& W_;
  CMatrix WRW_;
  const ArrayConfig& array_;
};

}  // namespace

void MomentEstimatorConfig::validate(const ArrayConfig& array) const {
  if (D < 2 || D > kMaxDifferenceOrder) {
    std::ostringstream msg;
    msg << "moment order D must lie in [2, " << kMaxDifferenceOrder << "], got " << D;
    throw Error(ErrorCode::invalid_argument, msg.str());
  }
  if (z0_search.grid_points != 0 && z0_search.grid_points < 8 * array.size()) {
    throw Error(ErrorCode::invalid_argument, "z0 grid needs at least 8 M points");
  }
  if (z0_search.refine_tol < 0.0) {
    throw Error(ErrorCode::invalid_argument, "refine_tol must be non-negative");
  }
}

std::vector<int> MomentEstimatorConfig::orders() const {
  std::vector<int> out;
  for (int d = 2; d <= D; ++d) {
    if (!symmetric || d % 2 == 0) out.push_back(d);
  }
  return out;
}

std::vector<std::string> Regressors::names() const {
  std::vector<std::string> out{"P", "sigma_eps2"};
  for (int d : orders) out.push_back("nu_" + std::to_string(d));
  return out;
}

CMatrix Regressors::vectorized() const {
  if (columns.empty()) return {};
  const Eigen::Index M = columns.front().rows();
  CMatrix J(M * M, count());
  for (int i = 0; i < count(); ++i) {
    J.col(i) = columns[static_cast<std::size_t>(i)].reshaped();
  }
  return J;
}

Regressors build_regressors(const MomentEstimatorConfig& config,
                            const ArrayConfig& array) {
  config.validate(array);
  const int M = array.size();
  Regressors J;
  J.orders = config.orders();
  J.columns.push_back(CMatrix::Ones(M, M));
  J.columns.push_back(CMatrix::Identity(M, M));
  for (int d : J.orders) {
    const cplx c = j_power(d) / factorial(d);
    J.columns.push_back(c * difference_power_matrix(array, d).cast<cplx>());
  }
  return J;
}

WeightMatrix weighting(const CovarianceModel& R_bar, Weighting choice) {
  const CMatrix& R = R_bar.matrix;
  const int M = R_bar.size();
  if (M == 0 || !R.allFinite() || R.norm() == 0.0) {
    throw Error(ErrorCode::degenerate_covariance, "covariance is zero or non-finite");
  }
  if (choice == Weighting::identity) return {CMatrix::Identity(M, M), false};

  const CMatrix H = 0.5 * (R + R.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(H);
  RVector lambda = eig.eigenvalues();
  const double lmax = lambda.maxCoeff();
  const double lmin = lambda.minCoeff();
  bool loaded = false;
  if (!(lmax > 0.0)) {
    throw Error(ErrorCode::degenerate_covariance, "covariance has no positive eigenvalue");
  }
  if (!(lmin > 0.0) || lmax / lmin > 1e12) {
    lambda.array() += 1e-8 * H.trace().real() / M;
    loaded = true;
  }
  CMatrix W = eig.eigenvectors() * lambda.cwiseInverse().asDiagonal() *
              eig.eigenvectors().adjoint();
  W = 0.5 * (W + W.adjoint());
  return {std::move(W), loaded};
}

NormalEquations assemble_normal_equations(double z, const CMatrix& R_bar,
                                          const Regressors& J, const CMatrix& W,
                                          const ArrayConfig& array) {
  return MatchingProblem(R_bar, J, W, array).normal_equations(z);
}

AlphaSolution solve_normal_equations(const NormalEquations& eq) {
  const Eigen::Index K = eq.Y.rows();
  RVector scale(K);
  for (Eigen::Index i = 0; i < K; ++i) {
    scale(i) = eq.Y(i, i) > 0.0 ? 1.0 / std::sqrt(eq.Y(i, i)) : 1.0;
  }
  const RMatrix Ys = scale.asDiagonal() * eq.Y * scale.asDiagonal();
  const RVector ys = scale.cwiseProduct(eq.y);
  Eigen::SelfAdjointEigenSolver<RMatrix> eig(Ys);
  const RVector& lambda = eig.eigenvalues();
  const double cutoff = 1e-12 * std::max(lambda.cwiseAbs().maxCoeff(), 1e-300);
  RVector inv(K);
  bool pinv = false;
  for (Eigen::Index i = 0; i < K; ++i) {
    if (lambda(i) > cutoff) {
      inv(i) = 1.0 / lambda(i);
    } else {
      inv(i) = 0.0;
      pinv = true;
    }
  }
  const RMatrix& V = eig.eigenvectors();
  const RVector alpha_s = V * inv.asDiagonal() * (V.transpose() * ys);
  AlphaSolution out;
  out.alpha = scale.cwiseProduct(alpha_s);
  out.objective = eq.y.dot(out.alpha);
  out.pseudo_inverse = pinv;
  return out;
}

double concentrated_objective(double z, const CMatrix& R_bar, const Regressors& J,
                              const CMatrix& W, const ArrayConfig& array) {
  return solve_normal_equations(assemble_normal_equations(z, R_bar, J, W, array))
      .objective;
}

AlphaSolution solve_alpha(double z, const CMatrix& R_bar, const Regressors& J,
                          const CMatrix& W, const ArrayConfig& array) {
  return solve_normal_equations(assemble_normal_equations(z, R_bar, J, W, array));
}

CMatrix model_covariance(double z, const RVector& alpha, const Regressors& J,
                         const ArrayConfig& array) {
  const int M = array.size();
  CMatrix X = CMatrix::Zero(M, M);
  for (int i = 0; i < J.count(); ++i) X += alpha(i) * J.columns[static_cast<std::size_t>(i)];
  // Phi X Phi^H = X .* conj(Q).
  return X.cwiseProduct(phase_matrix(array, z).conjugate());
}

double covariance_matching_cost(const CMatrix& R_bar, const CMatrix& R_hat,
                                const CMatrix& W) {
  const CMatrix E = R_bar - R_hat;
  const CMatrix A = E.adjoint() * W;
  const CMatrix B = E * W;
  return std::max(0.0, A.cwiseProduct(B.transpose()).sum().real());
}

double MomentEstimate::moment(int d) const {
  if (d == 0) return 1.0;
  if (d == 1) return 0.0;
  if (d < 0 || d > max_order()) {
    throw Error(ErrorCode::invalid_argument, "moment order outside the fitted model");
  }
  return nu(d - 2) / P_hat;
}

MomentEstimate estimate_moments(const CovarianceModel& R_bar,
                                const MomentEstimatorConfig& config,
                                const ArrayConfig& array) {
  if (R_bar.size() != array.size()) {
    throw Error(ErrorCode::invalid_argument, "covariance size does not match the array");
  }
  const Regressors J = build_regressors(config, array);
  const WeightMatrix W = weighting(R_bar, config.weighting);
  const MatchingProblem problem(R_bar.matrix, J, W.W, array);

  const double z_amb = array.ambiguity();
  const int grid = config.z0_search.grid_points > 0 ? config.z0_search.grid_points
                                                    : default_grid_points(array);
  const double step = z_amb / grid;
  const double tol = config.z0_search.refine_tol > 0.0 ? config.z0_search.refine_tol
                                                       : 1e-9 * z_amb;

  // Wide spreads make the spectrum change sign, and the height half an
  // ambiguity away then fits with a negative power. Only heights with a
  // positive power are admissible unless none is.
  const double inf = std::numeric_limits<double>::infinity();
  int best = 0, best_any = 0;
  double best_value = -inf, best_any_value = -inf;
  for (int i = 0; i < grid; ++i) {
    const AlphaSolution s = solve_normal_equations(problem.normal_equations(i * step));
    if (s.objective > best_any_value) {
      best_any_value = s.objective;
      best_any = i;
    }
    if (s.alpha(0) > 0.0 && s.objective > best_value) {
      best_value = s.objective;
      best = i;
    }
  }
  const bool constrained = best_value > -inf;
  if (!constrained) best = best_any;

  // Polish on the explicit residual, which unlike c - y^T Y^-1 y has no
  // cancellation near the optimum.
  auto residual = [&](double z) {
    const AlphaSolution s = solve_normal_equations(problem.normal_equations(z));
    if (constrained && !(s.alpha(0) > 0.0)) return inf;
    return problem.residual_cost(z, s.alpha);
  };
  const double center = best * step;
  const ScalarMinimum refined =
      golden_section_minimize(residual, center - step, center + step, tol);

  const AlphaSolution s = solve_normal_equations(problem.normal_equations(refined.x));
  MomentEstimate est;
  est.z0_hat = wrap_height(array, refined.x);
  est.P_hat = s.alpha(0);
  est.sigma_eps2_hat = s.alpha(1);
  est.nu = RVector::Zero(config.D - 1);
  for (std::size_t i = 0; i < J.orders.size(); ++i) {
    est.nu(J.orders[i] - 2) = s.alpha(static_cast<Eigen::Index>(i) + 2);
  }
  const double nu2 = est.nu(0);
  if (nu2 < 0.0 || est.P_hat <= 0.0) {
    est.diagnostics.clamped_sigma = true;
    est.sigma_z_hat = 0.0;
  } else {
    est.sigma_z_hat = std::sqrt(nu2 / est.P_hat);
  }
  est.cost = refined.value;
  est.diagnostics.grid_resolution_used = step;
  est.diagnostics.weighting_loaded = W.loaded;
  est.diagnostics.pseudo_inverse = s.pseudo_inverse;
  return est;
}

cplx moment_spectrum(const MomentEstimate& estimate, double xi) {
  cplx value = estimate.P_hat;
  double power = xi;
  for (int d = 2; d <= estimate.max_order(); ++d) {
    power *= xi;
    value += j_power(d) / factorial(d) * estimate.nu(d - 2) * power;
  }
  return value;
}

}  // namespace tomocomet

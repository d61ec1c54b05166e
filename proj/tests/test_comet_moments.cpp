#include "doctest.h"

#include <chrono>
#include <cmath>
#include <random>

#include <unsupported/Eigen/KroneckerProduct>

#include "tomocomet/comet_moments.hpp"
#include "tomocomet/error.hpp"
#include "tomocomet/reflectivity.hpp"
#include "tomocomet/simulation.hpp"

using namespace tomocomet;

namespace {

const ArrayConfig kArray = make_uniform_array(7, 100.0);

CovarianceModel uniform_truth(double z0 = 10.0, double sigma = 5.0) {
  return true_covariance({Shape::uniform, z0, sigma, 100.0}, kArray, 10.0);
}

CMatrix random_hermitian_pd(int M, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CMatrix A(M, M);
  for (int i = 0; i < M; ++i)
    for (int k = 0; k < M; ++k) A(i, k) = cplx(g(rng), g(rng));
  return A * A.adjoint() + CMatrix::Identity(M, M);
}

// Dense reference for the vectorized cost. Only used to check the
// Kronecker-free assembly.
struct DenseProblem {
  CMatrix K;   // W^T (x) W
  CMatrix PJ;  // diag(vec(a a^H)) J
  CVector r;

  DenseProblem(double z, const CMatrix& R, const Regressors& J, const CMatrix& W) {
    K = Eigen::kroneckerProduct(W.transpose(), W).eval();
    const CVector a = steering_vector(kArray, z);
    const CMatrix phase = a * a.adjoint();
    PJ = phase.reshaped().asDiagonal() * J.vectorized();
    r = R.reshaped();
  }
  double cost(const RVector& alpha) const {
    const CVector e = r - PJ * alpha.cast<cplx>();
    return (e.adjoint() * K * e)(0, 0).real();
  }
  CMatrix Y() const { return PJ.adjoint() * K * PJ; }
  CVector y() const { return PJ.adjoint() * K * r; }
};

}  // namespace

TEST_CASE("regressor columns") {
  MomentEstimatorConfig cfg;
  cfg.D = 4;
  cfg.symmetric = false;
  const auto J = build_regressors(cfg, kArray);
  REQUIRE(J.count() == 5);
  CHECK(J.names() == std::vector<std::string>{"P", "sigma_eps2", "nu_2", "nu_3", "nu_4"});
  CHECK((J.columns[0] - CMatrix::Ones(7, 7)).norm() == 0.0);
  CHECK((J.columns[1] - CMatrix::Identity(7, 7)).norm() == 0.0);
  const double xi = kArray.kz(3) - kArray.kz(1);
  CHECK(std::abs(J.columns[2](3, 1) - cplx(-xi * xi / 2.0, 0.0)) < 1e-14);
  CHECK(std::abs(J.columns[3](3, 1) - cplx(0.0, -xi * xi * xi / 6.0)) < 1e-14);
  CHECK(std::abs(J.columns[4](3, 1) - cplx(std::pow(xi, 4) / 24.0, 0.0)) < 1e-14);
  for (const auto& H : J.columns) CHECK((H - H.adjoint()).norm() < 1e-14);
  const CMatrix V = J.vectorized();
  CHECK(V.rows() == 49);
  CHECK(V(3 + 7 * 1, 2) == J.columns[2](3, 1));

  cfg.symmetric = true;
  cfg.D = 6;
  CHECK(cfg.orders() == std::vector<int>{2, 4, 6});
  CHECK(build_regressors(cfg, kArray).count() == 5);
}

TEST_CASE("config validation") {
  MomentEstimatorConfig cfg;
  cfg.D = 1;
  CHECK_THROWS_AS(cfg.validate(kArray), Error);
  cfg.D = kMaxDifferenceOrder + 1;
  CHECK_THROWS_AS(cfg.validate(kArray), Error);
  cfg.D = 4;
  cfg.z0_search.grid_points = 10;
  CHECK_THROWS_AS(cfg.validate(kArray), Error);
  cfg.z0_search.grid_points = 0;
  cfg.z0_search.refine_tol = -1.0;
  CHECK_THROWS_AS(cfg.validate(kArray), Error);
}

TEST_CASE("weighting matrices") {
  CovarianceModel R{2.0 * CMatrix::Identity(4, 4), CovarianceKind::sample};
  CHECK((weighting(R, Weighting::identity).W - CMatrix::Identity(4, 4)).norm() == 0.0);
  const auto W = weighting(R, Weighting::inverse_sample);
  CHECK_FALSE(W.loaded);
  CHECK((W.W - 0.5 * CMatrix::Identity(4, 4)).norm() < 1e-14);

  const auto Rt = uniform_truth();
  const auto Wt = weighting(Rt, Weighting::inverse_sample);
  CHECK((Wt.W * Rt.matrix - CMatrix::Identity(7, 7)).norm() < 1e-10);

  CovarianceModel zero{CMatrix::Zero(3, 3), CovarianceKind::sample};
  try {
    weighting(zero, Weighting::identity);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::degenerate_covariance);
  }

  // Rank-deficient sample covariance gets diagonal loading.
  CVector v = steering_vector(kArray, 3.0);
  CovarianceModel rank1{v * v.adjoint(), CovarianceKind::sample};
  const auto Wl = weighting(rank1, Weighting::inverse_sample);
  CHECK(Wl.loaded);
  CHECK(Wl.W.allFinite());
}

TEST_CASE("assembly matches the dense Kronecker form") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uz(0.0, 100.0), ua(-3.0, 3.0);
  for (bool symmetric : {true, false}) {
    MomentEstimatorConfig cfg;
    cfg.D = 4;
    cfg.symmetric = symmetric;
    const auto J = build_regressors(cfg, kArray);
    for (int t = 0; t < 20; ++t) {
      const CMatrix R = random_hermitian_pd(7, rng);
      const CMatrix W = random_hermitian_pd(7, rng).inverse();
      const double z = uz(rng);
      RVector alpha(J.count());
      for (int i = 0; i < J.count(); ++i) alpha(i) = ua(rng);

      const DenseProblem dense(z, R, J, W);
      const double direct = covariance_matching_cost(R, model_covariance(z, alpha, J, kArray), W);
      CHECK(direct == doctest::Approx(dense.cost(alpha)).epsilon(1e-9));

      const auto eq = assemble_normal_equations(z, R, J, W, kArray);
      CHECK(eq.imag_residue < 1e-9);
      const CMatrix Yd = dense.Y();
      const CVector yd = dense.y();
      CHECK((eq.Y - Yd.real()).norm() <= 1e-9 * Yd.norm());
      CHECK((eq.y - yd.real()).norm() <= 1e-9 * yd.norm());
      // The dense form is real as well.
      CHECK(Yd.imag().norm() <= 1e-9 * Yd.norm());
      CHECK(yd.imag().norm() <= 1e-9 * yd.norm());
    }
  }
}

TEST_CASE("concentration identity") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ua(-5.0, 5.0);
  MomentEstimatorConfig cfg;
  const auto J = build_regressors(cfg, kArray);
  const CMatrix R = uniform_truth().matrix + random_hermitian_pd(7, rng) * 0.1;
  const CMatrix W = weighting({R, CovarianceKind::sample}, Weighting::inverse_sample).W;
  const double z = 23.0;
  const auto eq = assemble_normal_equations(z, R, J, W, kArray);
  const auto sol = solve_normal_equations(eq);
  const double c0 = covariance_matching_cost(R, CMatrix::Zero(7, 7), W);
  const double at_min = covariance_matching_cost(R, model_covariance(z, sol.alpha, J, kArray), W);
  CHECK(at_min == doctest::Approx(c0 - sol.objective).epsilon(1e-8).scale(c0));
  CHECK(sol.objective == doctest::Approx(concentrated_objective(z, R, J, W, kArray)));
  for (int t = 0; t < 100; ++t) {
    RVector alpha = sol.alpha;
    for (int i = 0; i < alpha.size(); ++i) alpha(i) += ua(rng) * (1.0 + std::abs(alpha(i))) * 0.1;
    const double c = covariance_matching_cost(R, model_covariance(z, alpha, J, kArray), W);
    const double quad = c0 - 2.0 * alpha.dot(eq.y) + alpha.dot(eq.Y * alpha);
    CHECK(c == doctest::Approx(quad).epsilon(1e-8).scale(c0));
    CHECK(c >= at_min * (1.0 - 1e-12));
  }
}

TEST_CASE("concentrated objective peaks at the true height") {
  MomentEstimatorConfig cfg;
  const auto J = build_regressors(cfg, kArray);
  const auto R = uniform_truth(37.0);
  const CMatrix W = weighting(R, Weighting::inverse_sample).W;
  const double at_truth = concentrated_objective(37.0, R.matrix, J, W, kArray);
  const double dz = fourier_resolution(kArray);
  for (int i = 0; i < 400; ++i) {
    const double z = i * 0.25;
    CHECK(concentrated_objective(z, R.matrix, J, W, kArray) ==
          doctest::Approx(concentrated_objective(z + 100.0, R.matrix, J, W, kArray)).epsilon(1e-9));
    if (circular_distance(kArray, z, 37.0) > dz / 2.0)
      CHECK(concentrated_objective(z, R.matrix, J, W, kArray) < at_truth);
  }
}

TEST_CASE("point source is recovered exactly") {
  const auto R = true_covariance({Shape::point, 25.0, 0.0, 100.0}, kArray, 10.0);
  for (bool symmetric : {true, false}) {
    MomentEstimatorConfig cfg;
    cfg.symmetric = symmetric;
    const auto est = estimate_moments(R, cfg, kArray);
    CHECK(est.z0_hat == doctest::Approx(25.0).epsilon(1e-7));
    CHECK(est.P_hat == doctest::Approx(100.0).epsilon(1e-7));
    CHECK(est.sigma_eps2_hat == doctest::Approx(10.0).epsilon(1e-7));
    CHECK(est.sigma_z_hat < 1e-6);
    CHECK(est.cost < 1e-12);
  }
}

TEST_CASE("uniform source on exact covariance") {
  const auto R = uniform_truth();
  MomentEstimatorConfig cfg;
  const auto est = estimate_moments(R, cfg, kArray);
  CHECK(est.z0_hat == doctest::Approx(10.0).epsilon(1e-6));
  CHECK(est.P_hat == doctest::Approx(100.0).epsilon(2e-3));
  CHECK(est.sigma_z_hat == doctest::Approx(5.0).epsilon(5e-3));
  CHECK(est.moment(2) == doctest::Approx(25.0).epsilon(1e-2));
  CHECK(est.moment(0) == 1.0);
  CHECK(est.moment(1) == 0.0);
  CHECK(est.nu.size() == 5);
  CHECK(est.nu(1) == 0.0);  // odd order absent from the symmetric model
  CHECK_THROWS_AS(est.moment(7), Error);
  CHECK(std::abs(moment_spectrum(est, 0.0) - cplx(est.P_hat, 0.0)) < 1e-12);
  const double xi = kArray.kz(2) - kArray.kz(0);
  CHECK(std::abs(moment_spectrum(est, xi) - 100.0 * characteristic_function({Shape::uniform, 0, 5, 1}, xi)) < 0.05);
}

TEST_CASE("equivariance under height shift and power scaling") {
  CovarianceModel R = sample_covariance(sample_snapshots(uniform_truth(), 300, 17));
  MomentEstimatorConfig cfg;
  const auto base = estimate_moments(R, cfg, kArray);

  // Modulating by a(d) a(d)^H moves the source by d.
  const double d = 21.5;
  const CVector a = steering_vector(kArray, d);
  CovarianceModel shifted{R.matrix.cwiseProduct(a * a.adjoint()), CovarianceKind::sample};
  const auto s = estimate_moments(shifted, cfg, kArray);
  CHECK(circular_distance(kArray, s.z0_hat, base.z0_hat + d) < 1e-6);
  CHECK(s.P_hat == doctest::Approx(base.P_hat).epsilon(1e-6));
  CHECK(s.sigma_z_hat == doctest::Approx(base.sigma_z_hat).epsilon(1e-6));

  CovarianceModel scaled{3.0 * R.matrix, CovarianceKind::sample};
  const auto c = estimate_moments(scaled, cfg, kArray);
  CHECK(circular_distance(kArray, c.z0_hat, base.z0_hat) < 1e-6);
  CHECK(c.P_hat == doctest::Approx(3.0 * base.P_hat).epsilon(1e-6));
  CHECK(c.sigma_eps2_hat == doctest::Approx(3.0 * base.sigma_eps2_hat).epsilon(1e-6));
  CHECK(c.sigma_z_hat == doctest::Approx(base.sigma_z_hat).epsilon(1e-6));
}

TEST_CASE("size mismatch and degenerate inputs") {
  MomentEstimatorConfig cfg;
  CovarianceModel small{CMatrix::Identity(3, 3), CovarianceKind::sample};
  CHECK_THROWS_AS(estimate_moments(small, cfg, kArray), Error);
  CovarianceModel zero{CMatrix::Zero(7, 7), CovarianceKind::sample};
  CHECK_THROWS_AS(estimate_moments(zero, cfg, kArray), Error);
}

TEST_CASE("wide spreads keep a positive power inside the support") {
  // Past ~10 % of the ambiguity the truncated fit can prefer heights off the
  // center; they must still fall inside the source support.
  MomentEstimatorConfig cfg;
  double prev_bias = 0.0;
  for (double sigma : {8.0, 12.0, 15.0, 20.0, 25.0}) {
    const auto est = estimate_moments(uniform_truth(10.0, sigma), cfg, kArray);
    CAPTURE(sigma);
    CHECK(circular_distance(kArray, est.z0_hat, 10.0) < sigma);
    CHECK(est.P_hat > 0.0);
    // The truncation bias grows with the spread.
    const double bias = 100.0 - est.P_hat;
    CHECK(bias > prev_bias);
    prev_bias = bias;
  }
}

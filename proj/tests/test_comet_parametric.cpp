#include "doctest.h"

#include "tomocomet/comet_moments.hpp"
#include "tomocomet/comet_parametric.hpp"
#include "tomocomet/error.hpp"
#include "tomocomet/simulation.hpp"

using namespace tomocomet;

namespace {
const ArrayConfig kArray = make_uniform_array(7, 100.0);
}

TEST_CASE("well-specified model is recovered on exact covariance") {
  for (Shape shape : {Shape::uniform, Shape::gaussian}) {
    const auto R = true_covariance({shape, 62.0, 7.0, 50.0}, kArray, 4.0);
    ParametricEstimatorConfig cfg;
    cfg.assumed_shape = shape;
    const auto est = estimate_parametric(R, cfg, kArray);
    CHECK(est.z0_hat == doctest::Approx(62.0).epsilon(1e-7));
    CHECK(est.sigma_z_hat == doctest::Approx(7.0).epsilon(1e-6));
    CHECK(est.P_hat == doctest::Approx(50.0).epsilon(1e-6));
    CHECK(est.sigma_eps2_hat == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(est.cost < 1e-10);
  }
}

TEST_CASE("point source gives zero spread under either assumption") {
  const auto R = true_covariance({Shape::point, 25.0, 0.0, 100.0}, kArray, 10.0);
  for (Shape shape : {Shape::uniform, Shape::gaussian}) {
    ParametricEstimatorConfig cfg;
    cfg.assumed_shape = shape;
    const auto est = estimate_parametric(R, cfg, kArray);
    CHECK(est.z0_hat == doctest::Approx(25.0).epsilon(1e-7));
    CHECK(est.sigma_z_hat < 1e-6);
    CHECK(est.P_hat == doctest::Approx(100.0).epsilon(1e-7));
  }
}

TEST_CASE("misspecified shape is biased") {
  const auto R = true_covariance({Shape::uniform, 10.0, 5.0, 100.0}, kArray, 10.0);
  ParametricEstimatorConfig cfg;
  cfg.assumed_shape = Shape::gaussian;
  const auto est = estimate_parametric(R, cfg, kArray);
  CHECK(est.z0_hat == doctest::Approx(10.0).epsilon(1e-6));
  CHECK(std::abs(est.P_hat - 100.0) > 1.0);
  CHECK(std::abs(est.sigma_z_hat - 5.0) > 0.1);
  CHECK(est.cost > 1e-8);
}

TEST_CASE("fit at the true parameters has zero residual") {
  const auto R = true_covariance({Shape::gaussian, 30.0, 3.0, 20.0}, kArray, 2.0);
  const CMatrix W = weighting(R, Weighting::inverse_sample).W;
  const auto fit = fit_power_and_noise(R.matrix, W, Shape::gaussian, 30.0, 3.0, kArray);
  CHECK(fit.P == doctest::Approx(20.0));
  CHECK(fit.sigma_eps2 == doctest::Approx(2.0));
  CHECK(fit.cost < 1e-12);
  const auto off = fit_power_and_noise(R.matrix, W, Shape::gaussian, 33.0, 3.0, kArray);
  CHECK(off.cost > fit.cost);
}

TEST_CASE("sample covariance estimate is close to the truth") {
  const auto R = true_covariance({Shape::uniform, 10.0, 5.0, 100.0}, kArray, 10.0);
  const auto S = sample_covariance(sample_snapshots(R, 5000, 3));
  ParametricEstimatorConfig cfg;
  const auto est = estimate_parametric(S, cfg, kArray);
  CHECK(circular_distance(kArray, est.z0_hat, 10.0) < 0.3);
  CHECK(est.sigma_z_hat == doctest::Approx(5.0).epsilon(0.05));
  CHECK(est.P_hat == doctest::Approx(100.0).epsilon(0.1));
}

TEST_CASE("invalid parametric configs") {
  ParametricEstimatorConfig cfg;
  cfg.assumed_shape = Shape::point;
  CHECK_THROWS_AS(cfg.validate(kArray), Error);
  cfg = {};
  cfg.sigma_grid.points = 0;
  CHECK_THROWS_AS(cfg.validate(kArray), Error);
  cfg = {};
  cfg.sigma_grid.min = 10.0;
  cfg.sigma_grid.max = 5.0;
  CHECK_THROWS_AS(cfg.validate(kArray), Error);
}

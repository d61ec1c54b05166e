#include "doctest.h"

#include <algorithm>

#include "tomocomet/error.hpp"
#include "tomocomet/serialization.hpp"

using namespace tomocomet;

TEST_CASE("array json forms") {
  const auto u = array_from_json(json{{"M", 5}, {"z_amb", 40.0}});
  CHECK(u.size() == 5);
  CHECK(u.ambiguity() == doctest::Approx(40.0));
  const auto back = array_from_json(array_to_json(u));
  CHECK(back.kz() == u.kz());
  CHECK(back.ambiguity() == u.ambiguity());
  const auto e = array_from_json(json{{"kz", {0.0, 0.1, 0.3}}});
  CHECK(e.ambiguity() == doctest::Approx(2.0 * kPi / 0.1));
  CHECK_THROWS_AS(array_from_json(json{{"M", 5}}), Error);
}

TEST_CASE("estimator configs round trip") {
  MomentEstimatorConfig m;
  m.D = 4;
  m.symmetric = false;
  m.weighting = Weighting::identity;
  m.z0_search = {128, 1e-5};
  const auto m2 = moment_config_from_json(moment_config_to_json(m));
  CHECK(m2.D == 4);
  CHECK_FALSE(m2.symmetric);
  CHECK(m2.weighting == Weighting::identity);
  CHECK(m2.z0_search.grid_points == 128);
  CHECK(m2.z0_search.refine_tol == 1e-5);

  ParametricEstimatorConfig p;
  p.assumed_shape = Shape::gaussian;
  p.sigma_grid = {1.0, 20.0, 33};
  p.z0_grid = 200;
  const auto p2 = parametric_config_from_json(parametric_config_to_json(p));
  CHECK(p2.assumed_shape == Shape::gaussian);
  CHECK(p2.sigma_grid.min == 1.0);
  CHECK(p2.sigma_grid.max == 20.0);
  CHECK(p2.sigma_grid.points == 33);
  CHECK(p2.z0_grid == 200);

  const EstimatorSpec spec{"param", p};
  const auto s2 = estimator_from_json(estimator_to_json(spec));
  CHECK(s2.label == "param");
  CHECK(std::holds_alternative<ParametricEstimatorConfig>(s2.config));
  CHECK_THROWS_AS(estimator_from_json(json{{"label", "x"}, {"type", "music"}}), Error);
}

TEST_CASE("experiment spec round trip") {
  auto spec = default_experiment(ExperimentKind::rmse_vs_N);
  spec.trials = 12;
  spec.master_seed = 99;
  spec.N_list = {10, 20};
  spec.timestamp = false;
  const auto j = experiment_to_json(spec);
  const auto back = experiment_from_json(j, ExperimentKind::rmse_vs_N);
  CHECK(experiment_to_json(back) == j);
  CHECK(back.trials == 12);
  CHECK(back.master_seed == 99u);
  CHECK(back.estimators.size() == spec.estimators.size());
  CHECK_THROWS_AS(experiment_from_json(j, ExperimentKind::spectrum_dump), Error);
}

TEST_CASE("partial experiment config falls back to defaults") {
  const auto spec = experiment_from_json(json{{"trials", 7}}, ExperimentKind::asymptotic_bias_vs_sigma);
  CHECK(spec.trials == 7);
  CHECK(spec.kind == ExperimentKind::asymptotic_bias_vs_sigma);
  CHECK(spec.scenario.profile.sigma_z == 5.0);
  CHECK_FALSE(spec.estimators.empty());
}

TEST_CASE("malformed json reports invalid-argument") {
  try {
    experiment_from_json(json{{"trials", "many"}}, ExperimentKind::rmse_vs_N);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_argument);
    CHECK(to_string(e.code()) == "invalid-argument");
  }
  CHECK_THROWS_AS(weighting_from_string("diagonal"), Error);
  CHECK_THROWS_AS(experiment_kind_from_string("music"), Error);
  CHECK(experiment_kind_from_string("bias") == ExperimentKind::asymptotic_bias_vs_sigma);
}

TEST_CASE("csv helpers") {
  CHECK(moment_estimate_csv_header(4) ==
        "z0_hat,P_hat,sigma_eps2_hat,sigma_z_hat,nu_2,nu_3,nu_4,cost,flags");
  MomentEstimate est;
  est.z0_hat = 1.5;
  est.P_hat = 2.0;
  est.nu = RVector::Zero(3);
  const auto row = moment_estimate_csv_row(est);
  CHECK(std::count(row.begin(), row.end(), ',') == 8);
  CMatrix R(1, 2);
  R << cplx(1.0, 2.0), cplx(-3.0, 0.5);
  const auto csv = covariance_to_csv(R);
  CHECK(csv.find('1') != std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1);
}

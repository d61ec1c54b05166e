#include "tomocomet/serialization.hpp"

#include <iomanip>
#include <sstream>

#include "tomocomet/error.hpp"

namespace tomocomet {

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

// nlohmann reports schema problems as json::exception; surface them as ours.
template <typename F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_argument, std::string("config: ") + e.what());
  }
}

}  // namespace

ArrayConfig array_from_json(const json& j) {
  return guarded([&] {
    if (j.contains("kz")) {
      auto kz = j.at("kz").get<std::vector<double>>();
      std::optional<double> amb;
      if (j.contains("z_amb")) amb = j.at("z_amb").get<double>();
      return ArrayConfig(std::move(kz), amb);
    }
    if (j.contains("M") && j.contains("z_amb")) {
      return make_uniform_array(j.at("M").get<int>(), j.at("z_amb").get<double>());
    }
    throw Error(ErrorCode::invalid_argument,
                "array needs either \"kz\" or both \"M\" and \"z_amb\"");
  });
}

json array_to_json(const ArrayConfig& array) {
  return json{{"kz", array.kz()}, {"z_amb", array.ambiguity()}};
}

SourceProfile profile_from_json(const json& j) {
  return guarded([&] {
    SourceProfile p;
    p.shape = shape_from_string(j.at("shape").get<std::string>());
    p.z0 = get_or(j, "z0", 0.0);
    p.sigma_z = get_or(j, "sigma_z", 0.0);
    p.P = j.at("P").get<double>();
    p.validate();
    return p;
  });
}

json profile_to_json(const SourceProfile& p) {
  return json{{"shape", std::string(to_string(p.shape))},
              {"z0", p.z0},
              {"sigma_z", p.sigma_z},
              {"P", p.P}};
}

Weighting weighting_from_string(std::string_view name) {
  if (name == "identity") return Weighting::identity;
  if (name == "inverse_sample") return Weighting::inverse_sample;
  throw Error(ErrorCode::invalid_argument, "unknown weighting '" + std::string(name) + "'");
}

std::string_view to_string(Weighting w) {
  return w == Weighting::identity ? "identity" : "inverse_sample";
}

MomentEstimatorConfig moment_config_from_json(const json& j) {
  return guarded([&] {
    MomentEstimatorConfig c;
    c.D = get_or(j, "D", c.D);
    c.symmetric = get_or(j, "symmetric", c.symmetric);
    if (j.contains("weighting")) {
      c.weighting = weighting_from_string(j.at("weighting").get<std::string>());
    }
    if (j.contains("z0_search")) {
      const json& s = j.at("z0_search");
      c.z0_search.grid_points = get_or(s, "grid_points", 0);
      c.z0_search.refine_tol = get_or(s, "refine_tol", 0.0);
    }
    return c;
  });
}

json moment_config_to_json(const MomentEstimatorConfig& c) {
  return json{{"D", c.D},
              {"symmetric", c.symmetric},
              {"weighting", std::string(to_string(c.weighting))},
              {"z0_search",
               {{"grid_points", c.z0_search.grid_points},
                {"refine_tol", c.z0_search.refine_tol}}}};
}

ParametricEstimatorConfig parametric_config_from_json(const json& j) {
  return guarded([&] {
    ParametricEstimatorConfig c;
    c.assumed_shape = shape_from_string(j.at("assumed_shape").get<std::string>());
    if (j.contains("weighting")) {
      c.weighting = weighting_from_string(j.at("weighting").get<std::string>());
    }
    c.z0_grid = get_or(j, "z0_grid", 0);
    if (j.contains("sigma_grid")) {
      const json& s = j.at("sigma_grid");
      c.sigma_grid.min = get_or(s, "min", c.sigma_grid.min);
      c.sigma_grid.max = get_or(s, "max", c.sigma_grid.max);
      c.sigma_grid.points = get_or(s, "points", c.sigma_grid.points);
    }
    c.refine_tol = get_or(j, "refine_tol", 0.0);
    return c;
  });
}

json parametric_config_to_json(const ParametricEstimatorConfig& c) {
  return json{{"assumed_shape", std::string(to_string(c.assumed_shape))},
              {"weighting", std::string(to_string(c.weighting))},
              {"z0_grid", c.z0_grid},
              {"sigma_grid",
               {{"min", c.sigma_grid.min},
                {"max", c.sigma_grid.max},
                {"points", c.sigma_grid.points}}},
              {"refine_tol", c.refine_tol}};
}

EstimatorSpec estimator_from_json(const json& j) {
  return guarded([&] {
    EstimatorSpec spec;
    spec.label = j.at("label").get<std::string>();
    const auto type = j.at("type").get<std::string>();
    if (type == "moments") {
      spec.config = moment_config_from_json(j);
    } else if (type == "parametric") {
      spec.config = parametric_config_from_json(j);
    } else {
      throw Error(ErrorCode::invalid_argument, "unknown estimator type '" + type + "'");
    }
    return spec;
  });
}

json estimator_to_json(const EstimatorSpec& spec) {
  json j;
  if (const auto* m = std::get_if<MomentEstimatorConfig>(&spec.config)) {
    j = moment_config_to_json(*m);
    j["type"] = "moments";
  } else {
    j = parametric_config_to_json(std::get<ParametricEstimatorConfig>(spec.config));
    j["type"] = "parametric";
  }
  j["label"] = spec.label;
  return j;
}

ExperimentKind experiment_kind_from_string(std::string_view name) {
  if (name == "spectrum_dump" || name == "spectrum") return ExperimentKind::spectrum_dump;
  if (name == "rmse_vs_N" || name == "rmse") return ExperimentKind::rmse_vs_N;
  if (name == "asymptotic_bias_vs_sigma" || name == "bias") {
    return ExperimentKind::asymptotic_bias_vs_sigma;
  }
  throw Error(ErrorCode::invalid_argument, "unknown experiment kind '" + std::string(name) + "'");
}

ExperimentSpec experiment_from_json(const json& j, ExperimentKind kind) {
  return guarded([&] {
    if (j.contains("kind")) {
      const auto declared = experiment_kind_from_string(j.at("kind").get<std::string>());
      if (declared != kind) {
        throw Error(ErrorCode::invalid_argument,
                    "config declares kind '" + std::string(to_string(declared)) +
                        "' but '" + std::string(to_string(kind)) + "' was requested");
      }
    }
    ExperimentSpec spec = default_experiment(kind);
    if (j.contains("scenario")) {
      const json& s = j.at("scenario");
      if (s.contains("array")) spec.scenario.array = array_from_json(s.at("array"));
      if (s.contains("profile")) spec.scenario.profile = profile_from_json(s.at("profile"));
      spec.scenario.sigma_eps2 = get_or(s, "sigma_eps2", spec.scenario.sigma_eps2);
    }
    if (j.contains("estimators")) {
      spec.estimators.clear();
      for (const json& e : j.at("estimators")) spec.estimators.push_back(estimator_from_json(e));
    }
    if (j.contains("N_list")) spec.N_list = j.at("N_list").get<std::vector<int>>();
    if (j.contains("sigma_list")) spec.sigma_list = j.at("sigma_list").get<std::vector<double>>();
    spec.trials = get_or(j, "trials", spec.trials);
    spec.master_seed = get_or(j, "master_seed", spec.master_seed);
    if (j.contains("output_dir")) spec.output_dir = j.at("output_dir").get<std::string>();
    spec.threads = get_or(j, "threads", spec.threads);
    spec.timestamp = get_or(j, "timestamp", spec.timestamp);
    spec.raw_rows = get_or(j, "raw_rows", spec.raw_rows);
    return spec;
  });
}

json experiment_to_json(const ExperimentSpec& spec) {
  json estimators = json::array();
  for (const auto& e : spec.estimators) estimators.push_back(estimator_to_json(e));
  return json{{"kind", std::string(to_string(spec.kind))},
              {"scenario",
               {{"array", array_to_json(spec.scenario.array)},
                {"profile", profile_to_json(spec.scenario.profile)},
                {"sigma_eps2", spec.scenario.sigma_eps2}}},
              {"estimators", estimators},
              {"N_list", spec.N_list},
              {"sigma_list", spec.sigma_list},
              {"trials", spec.trials},
              {"master_seed", spec.master_seed},
              {"output_dir", spec.output_dir.string()},
              {"threads", spec.threads},
              {"timestamp", spec.timestamp},
              {"raw_rows", spec.raw_rows}};
}

std::string moment_estimate_csv_header(int D) {
  std::ostringstream out;
  out << "z0_hat,P_hat,sigma_eps2_hat,sigma_z_hat";
  for (int d = 2; d <= D; ++d) out << ",nu_" << d;
  out << ",cost,flags";
  return out.str();
}

std::string moment_estimate_csv_row(const MomentEstimate& e) {
  std::ostringstream out;
  out << std::setprecision(12) << e.z0_hat << ',' << e.P_hat << ',' << e.sigma_eps2_hat
      << ',' << e.sigma_z_hat;
  for (Eigen::Index i = 0; i < e.nu.size(); ++i) out << ',' << e.nu(i);
  out << ',' << e.cost << ',';
  std::vector<std::string> flags;
  if (e.diagnostics.clamped_sigma) flags.emplace_back("clamped_sigma");
  if (e.diagnostics.weighting_loaded) flags.emplace_back("weighting_loaded");
  if (e.diagnostics.pseudo_inverse) flags.emplace_back("pseudo_inverse");
  for (std::size_t i = 0; i < flags.size(); ++i) out << (i ? "|" : "") << flags[i];
  return out.str();
}

std::string covariance_to_csv(const CMatrix& R) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (Eigen::Index n = 0; n < R.rows(); ++n) {
    for (Eigen::Index m = 0; m < R.cols(); ++m) {
      if (m) out << ',';
      out << R(n, m).real() << ',' << R(n, m).imag();
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace tomocomet

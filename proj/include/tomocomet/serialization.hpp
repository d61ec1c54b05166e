#pragma once

#include <json.hpp>

#include "tomocomet/array_geometry.hpp"
#include "tomocomet/comet_moments.hpp"
#include "tomocomet/comet_parametric.hpp"
#include "tomocomet/experiments.hpp"
#include "tomocomet/reflectivity.hpp"

namespace tomocomet {

using nlohmann::json;

/// Accepts {"kz": [...], "z_amb"?: float} or {"M": int, "z_amb": float}.
ArrayConfig array_from_json(const json& j);
json array_to_json(const ArrayConfig& array);

SourceProfile profile_from_json(const json& j);
json profile_to_json(const SourceProfile& profile);

Weighting weighting_from_string(std::string_view name);
std::string_view to_string(Weighting w);

MomentEstimatorConfig moment_config_from_json(const json& j);
json moment_config_to_json(const MomentEstimatorConfig& config);

ParametricEstimatorConfig parametric_config_from_json(const json& j);
json parametric_config_to_json(const ParametricEstimatorConfig& config);

/// {"label": ..., "type": "moments" | "parametric", ...config fields}
EstimatorSpec estimator_from_json(const json& j);
json estimator_to_json(const EstimatorSpec& spec);

/// Missing fields fall back to default_experiment(kind).
ExperimentSpec experiment_from_json(const json& j, ExperimentKind kind);
json experiment_to_json(const ExperimentSpec& spec);

ExperimentKind experiment_kind_from_string(std::string_view name);

/// Header and row of a MomentEstimate in CSV form:
/// z0_hat,P_hat,sigma_eps2_hat,sigma_z_hat,nu_2..nu_D,cost,flags
std::string moment_estimate_csv_header(int D);
std::string moment_estimate_csv_row(const MomentEstimate& estimate);

/// Row-major interleaved real/imag dump of a covariance, one matrix row per
/// line.
std::string covariance_to_csv(const CMatrix& R);

}  // namespace tomocomet

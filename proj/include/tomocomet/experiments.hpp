#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tomocomet/array_geometry.hpp"
#include "tomocomet/comet_moments.hpp"
#include "tomocomet/comet_parametric.hpp"
#include "tomocomet/reflectivity.hpp"

namespace tomocomet {

struct Scenario {
  ArrayConfig array = make_uniform_array(7, 100.0);
  SourceProfile profile{Shape::uniform, 10.0, 5.0, 100.0};
  double sigma_eps2 = 10.0;
};

struct EstimatorSpec {
  std::string label;
  std::variant<MomentEstimatorConfig, ParametricEstimatorConfig> config;
};

/// Point estimates common to both estimator families.
struct PointEstimate {
  double z0 = 0.0;
  double sigma_z = 0.0;
  double P = 0.0;
  double sigma_eps2 = 0.0;
};

PointEstimate run_estimator(const EstimatorSpec& spec,
                            const CovarianceModel& R_bar,
                            const ArrayConfig& array);

enum class ExperimentKind { spectrum_dump, rmse_vs_N, asymptotic_bias_vs_sigma };

std::string_view to_string(ExperimentKind kind);

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::rmse_vs_N;
  Scenario scenario;
  std::vector<EstimatorSpec> estimators;
  std::vector<int> N_list;
  std::vector<double> sigma_list;
  int trials = 5000;
  std::uint64_t master_seed = 1;
  std::filesystem::path output_dir = "out";
  /// 0 uses std::thread::hardware_concurrency().
  int threads = 0;
  /// Prefix CSV files with a "# generated <UTC time>" line.
  bool timestamp = true;
  /// Also write one row per (trial, estimator) for the rmse experiment.
  bool raw_rows = false;

  void validate() const;
};

/// Paper-scale defaults: z0 = 10 m, sigma_z = 5 m, P = 100, sigma_eps2 = 10,
/// M = 7, z_amb = 100 m, 5000 trials, and the four estimators of the RMSE
/// study (full and symmetric moments, correct and misspecified parametric).
ExperimentSpec default_experiment(ExperimentKind kind);

/// Scales trials down to 500 (the --fast mode).
void apply_fast_mode(ExperimentSpec& spec);

/// One aggregation cell of the long-format CSV.
struct AggregateRow {
  std::string experiment;
  std::string estimator;
  std::string sweep_name;
  double sweep_value = 0.0;
  std::string parameter;
  int n_trials = 0;
  double rmse = 0.0;
  double bias = 0.0;
  double mean = 0.0;
  /// NaN where no bound applies.
  double crb = 0.0;
  int failures = 0;
  /// rmse / dz for z0, rmse / sigma_z for sigma_z, rmse / P for P.
  double rmse_normalized = 0.0;
  /// Standard error of the mean squared error over trials.
  double mse_stderr = 0.0;
};

struct TrialRow {
  int sweep_index = 0;
  int trial = 0;
  std::string estimator;
  std::optional<PointEstimate> estimate;
};

struct ExperimentResult {
  std::vector<AggregateRow> rows;
  std::vector<TrialRow> raw;

  const AggregateRow& find(const std::string& estimator, double sweep_value,
                           const std::string& parameter) const;
};

/// Accumulates per-trial errors of one (estimator, sweep value, parameter)
/// cell in trial order.
class ErrorAccumulator {
 public:
  void add(double estimate, double error);
  void add_failure() { ++failures_; }

  int count() const { return count_; }
  int failures() const { return failures_; }
  double mean_estimate() const;
  double bias() const;
  double rmse() const;
  double variance() const;
  double mse_stderr() const;

 private:
  int count_ = 0;
  int failures_ = 0;
  double sum_estimate_ = 0.0;
  double sum_error_ = 0.0;
  double sum_error2_ = 0.0;
  double sum_error4_ = 0.0;
};

ExperimentResult compute_rmse_vs_N(const ExperimentSpec& spec);
ExperimentResult compute_asymptotic_bias_vs_sigma(const ExperimentSpec& spec);

/// Sampled curves of the observability study.
struct SpectrumDump {
  struct Density {
    std::string shape;
    double z, value;
  };
  struct Curve {
    std::string shape;
    double xi, spectrum, parabola;
  };
  struct Marker {
    std::string shape;
    int n, m;
    double xi, value_real, value_imag, modulus;
  };
  struct Fit {
    std::string shape, estimator;
    double sigma_z, xi, true_spectrum, fit_real, fit_imag;
  };
  std::vector<Density> density;
  std::vector<Curve> curves;
  std::vector<Marker> markers;
  std::vector<Fit> fits;
};

SpectrumDump compute_spectrum_dump(const ExperimentSpec& spec);

/// Fitted moment polynomials against the true spectrum on exact R, one block
/// per spread in sigma_list (companion of the bias study).
std::vector<SpectrumDump::Fit> compute_interpolation_curves(
    const ExperimentSpec& spec);

/// Compute and write CSV artifacts under spec.output_dir; returns the files
/// written.
std::vector<std::filesystem::path> run_spectrum_dump(const ExperimentSpec& spec);
std::vector<std::filesystem::path> run_rmse_vs_N(const ExperimentSpec& spec);
std::vector<std::filesystem::path> run_asymptotic_bias_vs_sigma(
    const ExperimentSpec& spec);

/// Long-format CSV of aggregate rows.
void write_aggregate_csv(const std::filesystem::path& path,
                         const std::vector<AggregateRow>& rows, bool timestamp);

}  // namespace tomocomet

#include "tomocomet/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "tomocomet/crb.hpp"
#include "tomocomet/error.hpp"
#include "tomocomet/simulation.hpp"

namespace tomocomet {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::array<const char*, 4> kParameters = {"z0", "sigma_z", "P", "sigma_eps2"};

std::vector<EstimatorSpec> default_estimators() {
  MomentEstimatorConfig full;
  full.symmetric = false;
  MomentEstimatorConfig symmetric;
  ParametricEstimatorConfig param_uniform;
  ParametricEstimatorConfig param_gaussian;
  param_gaussian.assumed_shape = Shape::gaussian;
  return {{"moments_full", full},
          {"moments_symmetric", symmetric},
          {"param_uniform", param_uniform},
          {"param_gaussian", param_gaussian}};
}

double truth_of(const Scenario& s, std::size_t parameter) {
  switch (parameter) {
    case 0: return s.profile.z0;
    case 1: return s.profile.sigma_z;
    case 2: return s.profile.P;
    default: return s.sigma_eps2;
  }
}

double value_of(const PointEstimate& e, std::size_t parameter) {
  switch (parameter) {
    case 0: return e.z0;
    case 1: return e.sigma_z;
    case 2: return e.P;
    default: return e.sigma_eps2;
  }
}

// Signed error; heights are compared on the circle of circumference z_amb.
double error_of(const Scenario& s, const PointEstimate& e, std::size_t parameter) {
  if (parameter == 0) {
    const double half = s.array.ambiguity() / 2.0;
    return wrap_height(s.array, e.z0 - s.profile.z0 + half) - half;
  }
  return value_of(e, parameter) - truth_of(s, parameter);
}

double normalizer(const Scenario& s, std::size_t parameter) {
  if (parameter == 0) return fourier_resolution(s.array);
  const double t = truth_of(s, parameter);
  return t > 0.0 ? t : kNaN;
}

int worker_count(int requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs body(i) for i in [0, count) over a pool of workers. The first
// exception is rethrown after all workers join.
template <typename Body>
void parallel_for(int count, int threads, Body&& body) {
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  const int n = std::min(worker_count(threads), std::max(count, 1));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::string timestamp_line() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  std::ostringstream out;
  out << "# generated " << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ") << '\n';
  return out.str();
}

std::ofstream open_csv(const std::filesystem::path& path, bool timestamp) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_error, "cannot open '" + path.string() + "' for writing");
  out << std::setprecision(12);
  if (timestamp) out << timestamp_line();
  return out;
}

void close_csv(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw Error(ErrorCode::io_error, "failed writing '" + path.string() + "'");
}

// Empty field for NaN.
struct Field {
  double v;
};
std::ostream& operator<<(std::ostream& os, Field f) {
  if (!std::isnan(f.v)) os << f.v;
  return os;
}

void check_sorted(const auto& list, const char* name) {
  if (list.empty()) throw Error(ErrorCode::invalid_argument, std::string(name) + " is empty");
  if (!std::is_sorted(list.begin(), list.end())) {
    throw Error(ErrorCode::invalid_argument, std::string(name) + " must be sorted");
  }
}

void validate_estimators(const ExperimentSpec& spec) {
  if (spec.estimators.empty()) {
    throw Error(ErrorCode::invalid_argument, "at least one estimator is required");
  }
  for (const auto& e : spec.estimators) {
    std::visit([&](const auto& c) { c.validate(spec.scenario.array); }, e.config);
  }
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::spectrum_dump: return "spectrum_dump";
    case ExperimentKind::rmse_vs_N: return "rmse_vs_N";
    case ExperimentKind::asymptotic_bias_vs_sigma: return "asymptotic_bias_vs_sigma";
  }
  return "unknown";
}

PointEstimate run_estimator(const EstimatorSpec& spec, const CovarianceModel& R_bar,
                            const ArrayConfig& array) {
  if (const auto* m = std::get_if<MomentEstimatorConfig>(&spec.config)) {
    const MomentEstimate e = estimate_moments(R_bar, *m, array);
    return {e.z0_hat, e.sigma_z_hat, e.P_hat, e.sigma_eps2_hat};
  }
  const auto& p = std::get<ParametricEstimatorConfig>(spec.config);
  const ParametricEstimate e = estimate_parametric(R_bar, p, array);
  return {e.z0_hat, e.sigma_z_hat, e.P_hat, e.sigma_eps2_hat};
}

void ExperimentSpec::validate() const {
  scenario.profile.validate();
  if (!(scenario.sigma_eps2 >= 0.0)) {
    throw Error(ErrorCode::invalid_argument, "sigma_eps2 must be non-negative");
  }
  if (trials < 1) throw Error(ErrorCode::invalid_argument, "trials must be >= 1");
  validate_estimators(*this);
  if (kind == ExperimentKind::rmse_vs_N) {
    check_sorted(N_list, "N_list");
    if (N_list.front() < 1) throw Error(ErrorCode::invalid_argument, "N must be >= 1");
  }
  if (kind == ExperimentKind::asymptotic_bias_vs_sigma) {
    check_sorted(sigma_list, "sigma_list");
    const double limit = 0.35 * scenario.array.ambiguity();
    if (sigma_list.front() < 0.0 || sigma_list.back() > limit) {
      throw Error(ErrorCode::invalid_argument, "sigma_list must lie within [0, 0.35 z_amb]");
    }
  }
}

ExperimentSpec default_experiment(ExperimentKind kind) {
  ExperimentSpec spec;
  spec.kind = kind;
  spec.estimators = default_estimators();
  spec.N_list = {25, 50, 100, 250, 500, 1000, 2500, 5000, 10000};
  for (int s = 0; s <= 35; ++s) spec.sigma_list.push_back(s);
  spec.trials = 5000;
  return spec;
}

void apply_fast_mode(ExperimentSpec& spec) { spec.trials = std::min(spec.trials, 500); }

const AggregateRow& ExperimentResult::find(const std::string& estimator, double sweep_value,
                                           const std::string& parameter) const {
  for (const auto& r : rows) {
    if (r.estimator == estimator && r.parameter == parameter &&
        std::abs(r.sweep_value - sweep_value) <= 1e-12 * std::max(1.0, std::abs(sweep_value))) {
      return r;
    }
  }
  throw Error(ErrorCode::invalid_argument, "no aggregate row for " + estimator + "/" + parameter);
}

void ErrorAccumulator::add(double estimate, double error) {
  ++count_;
  sum_estimate_ += estimate;
  sum_error_ += error;
  sum_error2_ += error * error;
  sum_error4_ += error * error * error * error;
}

double ErrorAccumulator::mean_estimate() const { return count_ ? sum_estimate_ / count_ : kNaN; }
double ErrorAccumulator::bias() const { return count_ ? sum_error_ / count_ : kNaN; }
double ErrorAccumulator::rmse() const { return count_ ? std::sqrt(sum_error2_ / count_) : kNaN; }

double ErrorAccumulator::variance() const {
  if (!count_) return kNaN;
  const double b = bias();
  return std::max(0.0, sum_error2_ / count_ - b * b);
}

double ErrorAccumulator::mse_stderr() const {
  if (!count_) return kNaN;
  const double mse = sum_error2_ / count_;
  return std::sqrt(std::max(0.0, sum_error4_ / count_ - mse * mse) / count_);
}

ExperimentResult compute_rmse_vs_N(const ExperimentSpec& spec) {
  spec.validate();
  const Scenario& sc = spec.scenario;
  const CovarianceModel R = true_covariance(sc.profile, sc.array, sc.sigma_eps2);
  const std::size_t n_est = spec.estimators.size();
  const int cells = static_cast<int>(spec.N_list.size());
  const int trials = spec.trials;

  // results[(cell * trials + trial) * n_est + e]
  std::vector<std::optional<PointEstimate>> results(
      static_cast<std::size_t>(cells) * static_cast<std::size_t>(trials) * n_est);
  parallel_for(cells * trials, spec.threads, [&](int item) {
    const int cell = item / trials;
    const int trial = item % trials;
    const std::uint64_t seed = derive_seed(spec.master_seed, static_cast<std::uint64_t>(cell),
                                           static_cast<std::uint64_t>(trial));
    const CovarianceModel R_bar =
        sample_covariance(sample_snapshots(R, spec.N_list[static_cast<std::size_t>(cell)], seed));
    for (std::size_t e = 0; e < n_est; ++e) {
      auto& slot = results[static_cast<std::size_t>(item) * n_est + e];
      try {
        slot = run_estimator(spec.estimators[e], R_bar, sc.array);
      } catch (const std::exception&) {
        slot.reset();
      }
    }
  });

  ExperimentResult out;
  for (int cell = 0; cell < cells; ++cell) {
    const int N = spec.N_list[static_cast<std::size_t>(cell)];
    std::array<double, 4> crb;
    crb.fill(kNaN);
    try {
      const CrbResult bound = cramer_rao_bound(sc.profile, sc.array, sc.sigma_eps2, N);
      crb = bound.stddev;
    } catch (const Error&) {
      // Unidentifiable scenario (e.g. a point source): no bound column.
    }
    for (std::size_t e = 0; e < n_est; ++e) {
      std::array<ErrorAccumulator, 4> acc;
      for (int trial = 0; trial < trials; ++trial) {
        const std::size_t item = static_cast<std::size_t>(cell) * trials + trial;
        const auto& r = results[item * n_est + e];
        if (spec.raw_rows) out.raw.push_back({cell, trial, spec.estimators[e].label, r});
        for (std::size_t p = 0; p < 4; ++p) {
          if (r) {
            acc[p].add(value_of(*r, p), error_of(sc, *r, p));
          } else {
            acc[p].add_failure();
          }
        }
      }
      if (acc[0].failures() * 100 > trials) {
        std::ostringstream msg;
        msg << "estimator '" << spec.estimators[e].label << "' failed on " << acc[0].failures()
            << " of " << trials << " trials at N = " << N;
        throw Error(ErrorCode::estimator_failure, msg.str());
      }
      for (std::size_t p = 0; p < 4; ++p) {
        AggregateRow row;
        row.experiment = "rmse_vs_N";
        row.estimator = spec.estimators[e].label;
        row.sweep_name = "N";
        row.sweep_value = N;
        row.parameter = kParameters[p];
        row.n_trials = acc[p].count();
        row.rmse = acc[p].rmse();
        row.bias = acc[p].bias();
        row.mean = p == 0 ? sc.profile.z0 + acc[p].bias() : acc[p].mean_estimate();
        row.crb = crb[p];
        row.failures = acc[p].failures();
        row.rmse_normalized = row.rmse / normalizer(sc, p);
        row.mse_stderr = acc[p].mse_stderr();
        out.rows.push_back(std::move(row));
      }
    }
  }
  return out;
}

ExperimentResult compute_asymptotic_bias_vs_sigma(const ExperimentSpec& spec) {
  spec.validate();
  const std::size_t n_est = spec.estimators.size();
  const int cells = static_cast<int>(spec.sigma_list.size());
  std::vector<std::optional<PointEstimate>> results(static_cast<std::size_t>(cells) * n_est);

  auto scenario_at = [&](int cell) {
    Scenario s = spec.scenario;
    s.profile.sigma_z = spec.sigma_list[static_cast<std::size_t>(cell)];
    if (s.profile.shape == Shape::point && s.profile.sigma_z > 0.0) s.profile.shape = Shape::uniform;
    return s;
  };

  parallel_for(cells * static_cast<int>(n_est), spec.threads, [&](int item) {
    const int cell = item / static_cast<int>(n_est);
    const std::size_t e = static_cast<std::size_t>(item) % n_est;
    const Scenario s = scenario_at(cell);
    const CovarianceModel R = true_covariance(s.profile, s.array, s.sigma_eps2);
    try {
      results[static_cast<std::size_t>(item)] = run_estimator(spec.estimators[e], R, s.array);
    } catch (const std::exception&) {
      results[static_cast<std::size_t>(item)].reset();
    }
  });

  ExperimentResult out;
  for (int cell = 0; cell < cells; ++cell) {
    const Scenario s = scenario_at(cell);
    for (std::size_t e = 0; e < n_est; ++e) {
      const auto& r = results[static_cast<std::size_t>(cell) * n_est + e];
      for (std::size_t p = 0; p < 4; ++p) {
        AggregateRow row;
        row.experiment = "asymptotic_bias_vs_sigma";
        row.estimator = spec.estimators[e].label;
        row.sweep_name = "sigma_z";
        row.sweep_value = s.profile.sigma_z;
        row.parameter = kParameters[p];
        row.crb = kNaN;
        if (r) {
          const double err = error_of(s, *r, p);
          row.n_trials = 1;
          row.bias = err;
          row.rmse = std::abs(err);
          row.mean = value_of(*r, p);
          row.rmse_normalized = row.rmse / normalizer(s, p);
        } else {
          row.failures = 1;
          row.bias = row.rmse = row.mean = row.rmse_normalized = kNaN;
        }
        row.mse_stderr = 0.0;
        out.rows.push_back(std::move(row));
      }
    }
  }
  return out;
}

namespace {

std::vector<SpectrumDump::Fit> interpolation_block(const Scenario& s,
                                                   const std::vector<EstimatorSpec>& estimators) {
  std::vector<SpectrumDump::Fit> fits;
  const CovarianceModel R = true_covariance(s.profile, s.array, s.sigma_eps2);
  const double xi_max = 1.2 * s.array.span();
  constexpr int kSamples = 241;
  for (const auto& spec : estimators) {
    const auto* config = std::get_if<MomentEstimatorConfig>(&spec.config);
    if (!config) continue;
    const MomentEstimate est = estimate_moments(R, *config, s.array);
    for (int i = 0; i < kSamples; ++i) {
      const double xi = xi_max * i / (kSamples - 1);
      const cplx fit = moment_spectrum(est, xi);
      fits.push_back({std::string(to_string(s.profile.shape)), spec.label, s.profile.sigma_z, xi,
                      s.profile.P * characteristic_function(s.profile, xi), fit.real(),
                      fit.imag()});
    }
  }
  return fits;
}

}  // namespace

std::vector<SpectrumDump::Fit> compute_interpolation_curves(const ExperimentSpec& spec) {
  spec.validate();
  std::vector<SpectrumDump::Fit> fits;
  for (double sigma : spec.sigma_list) {
    Scenario s = spec.scenario;
    s.profile.sigma_z = sigma;
    if (s.profile.shape == Shape::point && sigma > 0.0) s.profile.shape = Shape::uniform;
    auto block = interpolation_block(s, spec.estimators);
    fits.insert(fits.end(), block.begin(), block.end());
  }
  return fits;
}

SpectrumDump compute_spectrum_dump(const ExperimentSpec& spec) {
  spec.validate();
  const Scenario& sc = spec.scenario;
  const double P = sc.profile.P;
  const double sigma = sc.profile.sigma_z;
  const double xi_max = sc.array.span();

  std::vector<SourceProfile> shapes;
  for (Shape shape : {Shape::uniform, Shape::gaussian, Shape::point}) {
    SourceProfile p = sc.profile;
    p.shape = shape;
    if (shape == Shape::point) p.sigma_z = 0.0;
    shapes.push_back(p);
  }

  SpectrumDump dump;
  const double half = std::max(5.0 * sigma, 1.0);
  constexpr int kSamples = 401;
  for (const auto& p : shapes) {
    const std::string name(to_string(p.shape));
    if (p.shape != Shape::point) {
      for (int i = 0; i < kSamples; ++i) {
        const double z = p.z0 - half + 2.0 * half * i / (kSamples - 1);
        dump.density.push_back({name, z, P * shape_density(p, z - p.z0)});
      }
    }
    for (int i = 0; i < kSamples; ++i) {
      const double xi = -1.1 * xi_max + 2.2 * xi_max * i / (kSamples - 1);
      dump.curves.push_back({name, xi, P * characteristic_function(p, xi),
                             P - P * p.sigma_z * p.sigma_z * xi * xi / 2.0});
    }
    const CMatrix R = true_covariance(p, sc.array, sc.sigma_eps2).matrix;
    for (int n = 0; n < sc.array.size(); ++n) {
      for (int m = 0; m < sc.array.size(); ++m) {
        dump.markers.push_back({name, n, m, sc.array.kz(n) - sc.array.kz(m), R(n, m).real(),
                                R(n, m).imag(), std::abs(R(n, m))});
      }
    }
    Scenario s = sc;
    s.profile = p;
    auto block = interpolation_block(s, spec.estimators);
    dump.fits.insert(dump.fits.end(), block.begin(), block.end());
  }
  return dump;
}

void write_aggregate_csv(const std::filesystem::path& path, const std::vector<AggregateRow>& rows,
                         bool timestamp) {
  std::ofstream out = open_csv(path, timestamp);
  out << "experiment,estimator,sweep_name,sweep_value,parameter,n_trials,rmse,bias,mean,crb,"
         "failures,rmse_normalized\n";
  for (const auto& r : rows) {
    out << r.experiment << ',' << r.estimator << ',' << r.sweep_name << ',' << r.sweep_value << ','
        << r.parameter << ',' << r.n_trials << ',' << Field{r.rmse} << ',' << Field{r.bias} << ','
        << Field{r.mean} << ',' << Field{r.crb} << ',' << r.failures << ','
        << Field{r.rmse_normalized} << '\n';
  }
  close_csv(out, path);
}

namespace {

void write_fits(const std::filesystem::path& path, const std::vector<SpectrumDump::Fit>& fits,
                bool timestamp) {
  std::ofstream out = open_csv(path, timestamp);
  out << "shape,estimator,sigma_z,xi,true_spectrum,fit_real,fit_imag\n";
  for (const auto& f : fits) {
    out << f.shape << ',' << f.estimator << ',' << f.sigma_z << ',' << f.xi << ','
        << f.true_spectrum << ',' << f.fit_real << ',' << f.fit_imag << '\n';
  }
  close_csv(out, path);
}

}  // namespace

std::vector<std::filesystem::path> run_spectrum_dump(const ExperimentSpec& spec) {
  const SpectrumDump dump = compute_spectrum_dump(spec);
  const auto& dir = spec.output_dir;
  std::vector<std::filesystem::path> files{dir / "spectrum_density.csv",
                                           dir / "spectrum_curves.csv",
                                           dir / "spectrum_markers.csv", dir / "spectrum_fit.csv"};
  {
    std::ofstream out = open_csv(files[0], spec.timestamp);
    out << "shape,z,density\n";
    for (const auto& d : dump.density) out << d.shape << ',' << d.z << ',' << d.value << '\n';
    close_csv(out, files[0]);
  }
  {
    std::ofstream out = open_csv(files[1], spec.timestamp);
    out << "shape,xi,spectrum,parabola\n";
    for (const auto& c : dump.curves) {
      out << c.shape << ',' << c.xi << ',' << c.spectrum << ',' << c.parabola << '\n';
    }
    close_csv(out, files[1]);
  }
  {
    std::ofstream out = open_csv(files[2], spec.timestamp);
    out << "shape,n,m,xi,real,imag,modulus\n";
    for (const auto& k : dump.markers) {
      out << k.shape << ',' << k.n << ',' << k.m << ',' << k.xi << ',' << k.value_real << ','
          << k.value_imag << ',' << k.modulus << '\n';
    }
    close_csv(out, files[2]);
  }
  write_fits(files[3], dump.fits, spec.timestamp);
  return files;
}

std::vector<std::filesystem::path> run_rmse_vs_N(const ExperimentSpec& spec) {
  const ExperimentResult result = compute_rmse_vs_N(spec);
  std::vector<std::filesystem::path> files{spec.output_dir / "rmse_vs_N.csv"};
  write_aggregate_csv(files[0], result.rows, spec.timestamp);
  if (spec.raw_rows) {
    files.push_back(spec.output_dir / "rmse_vs_N_trials.csv");
    std::ofstream out = open_csv(files[1], spec.timestamp);
    out << "N,trial,estimator,ok,z0_hat,sigma_z_hat,P_hat,sigma_eps2_hat\n";
    for (const auto& r : result.raw) {
      out << spec.N_list[static_cast<std::size_t>(r.sweep_index)] << ',' << r.trial << ','
          << r.estimator << ',' << (r.estimate ? 1 : 0);
      if (r.estimate) {
        out << ',' << r.estimate->z0 << ',' << r.estimate->sigma_z << ',' << r.estimate->P << ','
            << r.estimate->sigma_eps2;
      } else {
        out << ",,,,";
      }
      out << '\n';
    }
    close_csv(out, files[1]);
  }
  return files;
}

std::vector<std::filesystem::path> run_asymptotic_bias_vs_sigma(const ExperimentSpec& spec) {
  const ExperimentResult result = compute_asymptotic_bias_vs_sigma(spec);
  std::vector<std::filesystem::path> files{spec.output_dir / "asymptotic_bias_vs_sigma.csv",
                                           spec.output_dir / "bias_interpolation.csv"};
  write_aggregate_csv(files[0], result.rows, spec.timestamp);
  write_fits(files[1], compute_interpolation_curves(spec), spec.timestamp);
  return files;
}

}  // namespace tomocomet

// Benchmark driver: `tomocomet {spectrum|rmse|bias} [--config f.json]
// [--seed u64] [--out dir] [--fast] [--trials n] [--threads n]
// [--no-timestamp] [--raw]`.
//
// On failure prints one line `error: <code>: <message>` to stderr and exits
// with status 1 (2 for usage errors).

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "tomocomet/error.hpp"
#include "tomocomet/experiments.hpp"
#include "tomocomet/serialization.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool fast = false;
  std::optional<int> trials;
  std::optional<int> threads;
  bool no_timestamp = false;
  bool raw = false;
  bool print_config = false;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_flag("--fast", o.fast, "scale trials down to 500");
  cmd->add_option("--trials", o.trials, "trial count override")->check(CLI::PositiveNumber);
  cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
  cmd->add_flag("--no-timestamp", o.no_timestamp, "omit the '# generated' header line");
  cmd->add_flag("--raw", o.raw, "also write per-trial rows (rmse only)");
  cmd->add_flag("--print-config", o.print_config, "print the resolved config and exit");
}

tomocomet::ExperimentSpec resolve(tomocomet::ExperimentKind kind, const Options& o) {
  using namespace tomocomet;
  ExperimentSpec spec = default_experiment(kind);
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw Error(ErrorCode::io_error, "cannot read '" + o.config + "'");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::invalid_argument, std::string("config: ") + e.what());
    }
    spec = experiment_from_json(j, kind);
  }
  if (o.fast) apply_fast_mode(spec);
  if (o.trials) spec.trials = *o.trials;
  if (o.seed) spec.master_seed = *o.seed;
  if (!o.out.empty()) spec.output_dir = o.out;
  if (o.threads) spec.threads = *o.threads;
  if (o.no_timestamp) spec.timestamp = false;
  if (o.raw) spec.raw_rows = true;
  spec.validate();
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace tomocomet;
  CLI::App app{"Moment-based covariance matching for SAR tomography: benchmarks"};
  app.require_subcommand(1);
  Options options;
  auto* spectrum = app.add_subcommand("spectrum", "dump shape spectra and moment fits");
  auto* rmse = app.add_subcommand("rmse", "Monte Carlo RMSE versus snapshot count");
  auto* bias = app.add_subcommand("bias", "asymptotic bias versus vertical spread");
  for (auto* cmd : {spectrum, rmse, bias}) add_common(cmd, options);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    ExperimentKind kind = ExperimentKind::spectrum_dump;
    if (rmse->parsed()) kind = ExperimentKind::rmse_vs_N;
    if (bias->parsed()) kind = ExperimentKind::asymptotic_bias_vs_sigma;
    const ExperimentSpec spec = resolve(kind, options);
    if (options.print_config) {
      std::cout << experiment_to_json(spec).dump(2) << '\n';
      return 0;
    }
    std::vector<std::filesystem::path> files;
    switch (kind) {
      case ExperimentKind::spectrum_dump: files = run_spectrum_dump(spec); break;
      case ExperimentKind::rmse_vs_N: files = run_rmse_vs_N(spec); break;
      case ExperimentKind::asymptotic_bias_vs_sigma:
        files = run_asymptotic_bias_vs_sigma(spec);
        break;
    }
    for (const auto& f : files) std::cout << f.string() << '\n';
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
}

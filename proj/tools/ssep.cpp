// Command-line front end: experiment sweep, single-trial traces, self-checks
// and table rendering.

#include <omp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "ssep/experiment.hpp"
#include "ssep/validation.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            bool serial) {
  const ssep::ExperimentConfig config = ssep::load_config(config_path);
  const ssep::SweepResult sweep =
      serial ? ssep::run_sweep_serial(config) : ssep::run_sweep(config);
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  write_file(dir / "results.csv", ssep::results_csv(sweep.records));
  const std::string md = ssep::tables_markdown(sweep.tables);
  write_file(dir / "tables.md", md);
  std::cout << md;
  std::cerr << "wrote " << (dir / "results.csv").string() << " and "
            << (dir / "tables.md").string() << "\n";
  return 0;
}

int cmd_trial(const std::string& config_path, std::uint64_t seed,
              std::size_t trial, double tau) {
  ssep::ExperimentConfig config;
  if (!config_path.empty()) config = ssep::load_config(config_path);
  config.seed = seed;
  config.damping_grid = {tau};
  config.validate();
  const ssep::TrialData data = ssep::generate_trial(config, trial);

  std::printf("# seed %llu trial %zu tau %g\n",
              static_cast<unsigned long long>(seed), trial, tau);
  std::printf("method,iteration,energy\n");
  const ssep::EPResult rep = ssep::run_rep(data.train, config.rep_options(tau));
  for (std::size_t k = 0; k < rep.energy_trace.size(); ++k) {
    std::printf("rep,%zu,%.17g\n", k + 1, rep.energy_trace[k]);
  }
  const ssep::PcepResult pc = ssep::run_pcep(data.train, config.pcep_options());
  for (std::size_t k = 0; k < pc.energy_trace.size(); ++k) {
    std::printf("pcep,%zu,%.17g\n", k + 1, pc.energy_trace[k]);
  }
  std::printf("# rep: converged=%d iterations=%zu mse=%.6g log_evidence=%.6g\n",
              rep.converged ? 1 : 0, rep.iterations,
              ssep::evaluate_mse(rep.moments.mean, data.test_x, data.test_y),
              rep.log_evidence);
  std::printf("# pcep: converged=%d iterations=%zu mse=%.6g log_evidence=%.6g\n",
              pc.converged ? 1 : 0, pc.iterations,
              ssep::evaluate_mse(pc.moments.mean, data.test_x, data.test_y),
              pc.log_evidence);
  return 0;
}

int cmd_validate(const ssep::ValidationOptions& options) {
  const auto results = ssep::run_validation(options);
  int failed = 0;
  for (const auto& r : results) {
    const char* tag = r.informational ? "INFO" : (r.passed ? "PASS" : "FAIL");
    std::printf("%s %s: %s\n", tag, r.name.c_str(), r.detail.c_str());
    if (!r.passed) ++failed;
  }
  return failed == 0 ? 0 : 1;
}

int cmd_tables(const std::string& in_path, const std::string& format) {
  const auto records = ssep::parse_results_csv(read_file(in_path));
  const ssep::SummaryTables tables = ssep::summarize(records);
  std::cout << (format == "csv" ? ssep::tables_csv(tables)
                                : ssep::tables_markdown(tables));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spike-and-slab linear regression with damped and double-loop EP"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP threads (0 keeps the default)")
      ->check(CLI::NonNegativeNumber);

  auto* run = app.add_subcommand("run", "Run the damping sweep from a config file");
  std::string config_path;
  std::string out_dir = ".";
  bool serial = false;
  run->add_option("--config", config_path, "key = value config file")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Directory for results.csv and tables.md");
  run->add_flag("--serial", serial, "Run trials on one thread");

  auto* trial = app.add_subcommand("trial", "Energy traces of one trial");
  std::uint64_t seed = 1;
  std::size_t trial_id = 0;
  double tau = 0.5;
  std::string trial_config;
  trial->add_option("--seed", seed, "Experiment seed")->required();
  trial->add_option("--trial", trial_id, "Trial index")->required();
  trial->add_option("--tau", tau, "R-EP damping in (0, 1]")
      ->required()
      ->check(CLI::Range(0.0, 1.0));
  trial->add_option("--config", trial_config, "Optional config for the other constants")
      ->check(CLI::ExistingFile);

  auto* validate = app.add_subcommand("validate", "Oracle and invariant checks at small d");
  ssep::ValidationOptions vopt;
  validate->add_option("--seed", vopt.seed, "Seed of the check instances");
  validate->add_option("--instances", vopt.instances, "Instances per check")
      ->check(CLI::PositiveNumber);

  auto* tables = app.add_subcommand("tables", "Summary tables from results.csv");
  std::string in_path;
  std::string format = "md";
  tables->add_option("--in", in_path, "results.csv")->required()->check(CLI::ExistingFile);
  tables->add_option("--format", format, "md or csv")
      ->check(CLI::IsMember({"md", "csv"}));

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) omp_set_num_threads(threads);

  try {
    if (*run) return cmd_run(config_path, out_dir, serial);
    if (*trial) return cmd_trial(trial_config, seed, trial_id, tau);
    if (*validate) return cmd_validate(vopt);
    if (*tables) return cmd_tables(in_path, format);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssep/model.hpp"
#include "ssep/pcep.hpp"
#include "ssep/rep.hpp"

namespace ssep {

/// Synthetic sparse-regression benchmark. Field names double as the keys of
/// the `key = value` config file.
struct ExperimentConfig {
  std::size_t d = 25;
  std::size_t n_train = 10;
  std::size_t n_test = 1000;
  std::size_t n_trials = 100;
  double slab_prob = 0.2;
  double slab_var = 1.0;
  double noise_std = 0.005;
  std::vector<double> damping_grid = {0.1, 0.3, 0.5, 0.7, 0.9};
  std::size_t rep_max_iter = 1000;
  double eps = kDefaultEps;
  std::uint64_t seed = 1;
  double rep_tol = 1e-6;
  double outer_tol = 1e-8;
  double inner_tol = 1e-8;

  void validate() const;  // throws std::invalid_argument
  RepOptions rep_options(double damping) const;
  PcepOptions pcep_options() const;
};

// Parses `key = value` lines; `#` starts a comment. Unknown keys, duplicate
// keys and malformed values throw std::invalid_argument naming the line.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string format_config(const ExperimentConfig& config);

struct TrialData {
  ModelInstance train;
  Matrix test_x;
  Vector test_y;
  Vector true_w;
};

/// One synthetic problem. Coefficients are drawn from the spike-and-slab
/// prior, inputs uniformly on the unit sphere, targets with Gaussian noise.
/// Every random stream is keyed by (seed, trial_id, purpose), so a trial is
/// reproducible on its own.
TrialData generate_trial(const ExperimentConfig& config, std::size_t trial_id);

// (1/n) sum_j (y_j - w' x_j)^2
double evaluate_mse(const Vector& w_hat, const Matrix& test_x,
                    const Vector& test_y);

struct TrialRecord {
  std::size_t trial_id = 0;
  double damping = 0.0;
  bool rep_converged = false;
  bool pcep_converged = false;
  double mse_rep = 0.0;
  double mse_pcep = 0.0;
  std::size_t rep_iterations = 0;
  std::size_t pcep_outer_iterations = 0;
  double rep_energy = 0.0;
  double pcep_energy = 0.0;
  // "ok" or a short failure tag.
  std::string rep_status = "ok";
  std::string pcep_status = "ok";

  bool ok() const { return rep_status == "ok" && pcep_status == "ok"; }
};

// Runs PC-EP once and R-EP for every damping value on one trial.
std::vector<TrialRecord> run_trial(const ExperimentConfig& config,
                                   std::size_t trial_id);

struct SummaryRow {
  double damping = 0.0;
  std::size_t count = 0;
  double pcep_mean = 0.0;
  double pcep_se = 0.0;
  double rep_mean = 0.0;
  double rep_se = 0.0;
};

struct SummaryTables {
  std::vector<SummaryRow> not_converged;
  std::vector<SummaryRow> converged;
  std::size_t failures = 0;
};

struct SweepResult {
  std::vector<TrialRecord> records;  // ordered by (trial_id, damping index)
  SummaryTables tables;
};

// Trials run in parallel; records are assembled in trial order.
SweepResult run_sweep(const ExperimentConfig& config);
// Same output computed on the calling thread only.
SweepResult run_sweep_serial(const ExperimentConfig& config);

// Splits records by R-EP convergence and aggregates the test MSE per damping
// value. "±" is the standard error of the mean. Failed records are counted
// and left out of the means.
SummaryTables summarize(const std::vector<TrialRecord>& records);

// One row per (trial, damping, method).
std::string results_csv(const std::vector<TrialRecord>& records);
std::vector<TrialRecord> parse_results_csv(const std::string& text);

std::string tables_markdown(const SummaryTables& tables);
std::string tables_csv(const SummaryTables& tables);

}  // namespace ssep

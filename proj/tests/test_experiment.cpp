#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "ssep/experiment.hpp"

using namespace ssep;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.d = 6;
  c.n_train = 3;
  c.n_test = 50;
  c.n_trials = 4;
  c.damping_grid = {0.5, 0.9};
  c.seed = 11;
  return c;
}

}  // namespace

TEST_CASE("default config mirrors the benchmark constants") {
  const ExperimentConfig c;
  CHECK(c.d == 25);
  CHECK(c.n_train == 10);
  CHECK(c.n_test == 1000);
  CHECK(c.n_trials == 100);
  CHECK(c.slab_prob == 0.2);
  CHECK(c.slab_var == 1.0);
  CHECK(c.noise_std == 0.005);
  CHECK(c.damping_grid == std::vector<double>{0.1, 0.3, 0.5, 0.7, 0.9});
  CHECK(c.rep_max_iter == 1000);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("config text round-trips") {
  const ExperimentConfig c = small_config();
  const ExperimentConfig back = parse_config(format_config(c));
  CHECK(format_config(back) == format_config(c));
  CHECK(back.damping_grid == c.damping_grid);

  const ExperimentConfig parsed = parse_config(
      "# comment line\n"
      "d = 7   # trailing comment\n"
      "\n"
      "damping_grid = 0.2, 0.4\n"
      "noise_std=0.01\n");
  CHECK(parsed.d == 7);
  CHECK(parsed.damping_grid == std::vector<double>{0.2, 0.4});
  CHECK(parsed.noise_std == 0.01);
  CHECK(parsed.n_train == 10);
}

TEST_CASE("config errors name the problem") {
  CHECK_THROWS_AS(parse_config("bogus = 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("d = 3\nd = 4\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("d = three\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("d 3\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("d = 0\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("slab_prob = 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("damping_grid = 0.5, 1.5\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("d = -2\n"), std::invalid_argument);
  try {
    parse_config("d = 3\nn_train = x\n");
    FAIL("expected a parse error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("generated inputs lie on the unit sphere") {
  const ExperimentConfig c;
  const TrialData t = generate_trial(c, 3);
  CHECK(t.train.design().rows() == 10);
  CHECK(t.test_x.rows() == 1000);
  for (Index r = 0; r < t.train.design().rows(); ++r) {
    CHECK(std::abs(t.train.design().row(r).norm() - 1.0) < 1e-12);
  }
  for (Index r = 0; r < t.test_x.rows(); ++r) {
    CHECK(std::abs(t.test_x.row(r).norm() - 1.0) < 1e-12);
  }
  CHECK(t.train.noise_var() == doctest::Approx(2.5e-5).epsilon(1e-15));
}

TEST_CASE("about five true coefficients are nonzero") {
  const ExperimentConfig c;
  double total = 0.0;
  for (std::size_t trial = 0; trial < 100; ++trial) {
    const TrialData t = generate_trial(c, trial);
    total += static_cast<double>((t.true_w.array() != 0.0).count());
  }
  // Binomial(25, 0.2) has sd 2, so the mean over 100 trials has sd 0.2.
  CHECK(std::abs(total / 100.0 - 5.0) < 0.6);
}

TEST_CASE("trials regenerate bit for bit") {
  const ExperimentConfig c = small_config();
  const TrialData a = generate_trial(c, 2);
  const TrialData b = generate_trial(c, 2);
  CHECK(a.train.design() == b.train.design());
  CHECK(a.train.targets() == b.train.targets());
  CHECK(a.test_x == b.test_x);
  CHECK(a.test_y == b.test_y);
  CHECK(a.true_w == b.true_w);
  const TrialData other = generate_trial(c, 3);
  CHECK(other.true_w != a.true_w);

  // Changing the damping grid does not shift the data.
  ExperimentConfig c2 = c;
  c2.damping_grid = {0.1};
  CHECK(generate_trial(c2, 2).train.targets() == a.train.targets());
}

TEST_CASE("test MSE") {
  const ExperimentConfig c;
  const TrialData t = generate_trial(c, 5);
  const double at_truth = evaluate_mse(t.true_w, t.test_x, t.test_y);
  CHECK(at_truth == doctest::Approx(2.5e-5).epsilon(0.15));
  CHECK(evaluate_mse(Vector::Zero(25), t.test_x, t.test_y) ==
        doctest::Approx(t.test_y.squaredNorm() / 1000.0).epsilon(1e-14));

  const Vector w = Vector::LinSpaced(25, -1.0, 1.0);
  double naive = 0.0;
  for (Index j = 0; j < t.test_x.rows(); ++j) {
    double pred = 0.0;
    for (Index i = 0; i < 25; ++i) pred += t.test_x(j, i) * w[i];
    naive += (t.test_y[j] - pred) * (t.test_y[j] - pred);
  }
  naive /= static_cast<double>(t.test_x.rows());
  CHECK(std::abs(evaluate_mse(w, t.test_x, t.test_y) - naive) < 1e-12 * naive);
  CHECK_THROWS_AS(evaluate_mse(Vector::Zero(3), t.test_x, t.test_y), std::invalid_argument);
}

TEST_CASE("sweep records, partitions and CSV") {
  const ExperimentConfig c = small_config();
  const SweepResult s = run_sweep(c);
  REQUIRE(s.records.size() == c.n_trials * c.damping_grid.size());
  for (std::size_t k = 0; k < s.records.size(); ++k) {
    CHECK(s.records[k].trial_id == k / 2);
    CHECK(s.records[k].damping == c.damping_grid[k % 2]);
  }
  std::size_t failed = 0;
  for (std::size_t tau = 0; tau < 2; ++tau) {
    std::size_t ok = 0;
    for (const auto& r : s.records) {
      if (r.damping == c.damping_grid[tau] && r.ok()) ++ok;
    }
    failed += c.n_trials - ok;
    CHECK(s.tables.converged[tau].count + s.tables.not_converged[tau].count == ok);
  }
  CHECK(s.tables.failures == failed);

  const std::string csv = results_csv(s.records);
  CHECK(csv.rfind("trial_id,tau,method,converged,mse,iterations,final_energy,status\n", 0) == 0);
  CHECK(csv.find('\r') == std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') ==
        static_cast<std::ptrdiff_t>(1 + 2 * s.records.size()));
  const auto back = parse_results_csv(csv);
  CHECK(results_csv(back) == csv);
  CHECK(tables_markdown(summarize(back)) == tables_markdown(s.tables));

  CHECK(results_csv(run_sweep_serial(c).records) == csv);
  CHECK(results_csv(run_sweep(c).records) == csv);
}

TEST_CASE("single trial leaves one partition empty") {
  ExperimentConfig c = small_config();
  c.n_trials = 1;
  c.damping_grid = {0.5};
  const SweepResult s = run_sweep(c);
  REQUIRE(s.tables.converged.size() == 1);
  REQUIRE(s.tables.not_converged.size() == 1);
  CHECK(s.tables.converged[0].count + s.tables.not_converged[0].count == 1);
  const std::string md = tables_markdown(s.tables);
  CHECK(md.find("| 0 |") != std::string::npos);
  CHECK(md.find("n/a") != std::string::npos);
  CHECK(md.find("standard error") != std::string::npos);
}

TEST_CASE("results parser rejects malformed input") {
  CHECK_THROWS_AS(parse_results_csv("nonsense\n"), std::invalid_argument);
  const std::string header =
      "trial_id,tau,method,converged,mse,iterations,final_energy,status\n";
  CHECK_THROWS_AS(parse_results_csv(header + "0,0.5,rep,1,0.1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_results_csv(header + "0,0.5,other,1,0.1,3,1.0,ok\n"),
                  std::invalid_argument);
}

// Wall-clock comparison of the OpenMP kernels with their serial references:
// the 2^d enumeration oracle and the trial sweep.
//
//   ssep_bench [oracle_d] [sweep_trials] [repeats]

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>

#include "ssep/experiment.hpp"
#include "ssep/oracle.hpp"

namespace {

double best_seconds(const std::function<void()>& body, int repeats) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    body();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

void report(const char* name, double serial, double parallel, bool same) {
  std::printf("%-8s serial %9.3f s   parallel %9.3f s   speedup %5.2fx   %s\n",
              name, serial, parallel, serial / parallel,
              same ? "outputs agree" : "OUTPUTS DIFFER");
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t oracle_d = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 14;
  const std::size_t trials = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 20;
  const int repeats = argc > 3 ? std::atoi(argv[3]) : 3;
  std::printf("threads available: %d\n", omp_get_max_threads());

  ssep::ExperimentConfig oc;
  oc.d = oracle_d;
  oc.n_train = std::max<std::size_t>(2, oracle_d / 2);
  const ssep::TrialData data = ssep::generate_trial(oc, 0);
  ssep::ExactPosterior a;
  ssep::ExactPosterior b;
  const double os = best_seconds([&] { a = ssep::exact_posterior_serial(data.train, oracle_d); }, repeats);
  const double op = best_seconds([&] { b = ssep::exact_posterior(data.train, oracle_d); }, repeats);
  const double gap = std::max((a.mean - b.mean).cwiseAbs().maxCoeff(),
                              std::abs(a.log_evidence - b.log_evidence));
  report(("oracle d=" + std::to_string(oracle_d)).c_str(), os, op, gap < 1e-10);

  ssep::ExperimentConfig sc;
  sc.n_trials = trials;
  std::string csv_serial;
  std::string csv_parallel;
  const double ss = best_seconds([&] { csv_serial = ssep::results_csv(ssep::run_sweep_serial(sc).records); }, 1);
  const double sp = best_seconds([&] { csv_parallel = ssep::results_csv(ssep::run_sweep(sc).records); }, 1);
  report(("sweep " + std::to_string(trials) + " trials").c_str(), ss, sp,
         csv_serial == csv_parallel);
  return 0;
}

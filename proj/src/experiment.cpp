#include "ssep/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string_view>

#include "ssep/errors.hpp"

namespace ssep {

// ---------------------------------------------------------------------------
// config

void ExperimentConfig::validate() const {
  if (d < 1 || n_train < 1 || n_test < 1 || n_trials < 1 || rep_max_iter < 1) {
    throw std::invalid_argument("config: counts must be at least 1");
  }
  if (!(slab_prob > 0.0 && slab_prob < 1.0)) {
    throw std::invalid_argument("config: slab_prob must lie in (0, 1)");
  }
  if (!(slab_var > 0.0) || !(noise_std > 0.0)) {
    throw std::invalid_argument("config: slab_var and noise_std must be positive");
  }
  if (damping_grid.empty()) {
    throw std::invalid_argument("config: damping_grid is empty");
  }
  for (double tau : damping_grid) {
    if (!(tau > 0.0 && tau <= 1.0)) {
      throw std::invalid_argument("config: damping values must lie in (0, 1]");
    }
  }
  if (!(eps > 0.0) || !(rep_tol > 0.0) || !(outer_tol > 0.0) ||
      !(inner_tol > 0.0)) {
    throw std::invalid_argument("config: eps and tolerances must be positive");
  }
}

RepOptions ExperimentConfig::rep_options(double damping) const {
  RepOptions o;
  o.damping = damping;
  o.max_iter = rep_max_iter;
  o.tol = rep_tol;
  o.eps = eps;
  return o;
}

PcepOptions ExperimentConfig::pcep_options() const {
  PcepOptions o;
  o.eps = eps;
  o.outer_tol = outer_tol;
  o.inner_tol = inner_tol;
  return o;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view text, const std::string& where) {
  T value{};
  const auto t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw std::invalid_argument(where + ": cannot parse '" + std::string(t) + "'");
  }
  return value;
}

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::map<std::string, bool> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = trim(view);
    if (view.empty()) continue;
    const std::string where = "config line " + std::to_string(lineno);
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument(where + ": expected 'key = value'");
    }
    const std::string key(trim(view.substr(0, eq)));
    const std::string_view value = trim(view.substr(eq + 1));
    if (seen[key]) throw std::invalid_argument(where + ": duplicate key " + key);
    seen[key] = true;

    if (key == "d") c.d = parse_number<std::size_t>(value, where);
    else if (key == "n_train") c.n_train = parse_number<std::size_t>(value, where);
    else if (key == "n_test") c.n_test = parse_number<std::size_t>(value, where);
    else if (key == "n_trials") c.n_trials = parse_number<std::size_t>(value, where);
    else if (key == "slab_prob") c.slab_prob = parse_number<double>(value, where);
    else if (key == "slab_var") c.slab_var = parse_number<double>(value, where);
    else if (key == "noise_std") c.noise_std = parse_number<double>(value, where);
    else if (key == "rep_max_iter") c.rep_max_iter = parse_number<std::size_t>(value, where);
    else if (key == "eps") c.eps = parse_number<double>(value, where);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(value, where);
    else if (key == "rep_tol") c.rep_tol = parse_number<double>(value, where);
    else if (key == "outer_tol") c.outer_tol = parse_number<double>(value, where);
    else if (key == "inner_tol") c.inner_tol = parse_number<double>(value, where);
    else if (key == "damping_grid") {
      c.damping_grid.clear();
      std::string_view rest = value;
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        c.damping_grid.push_back(parse_number<double>(rest.substr(0, comma), where));
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
      }
    } else {
      throw std::invalid_argument(where + ": unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string format_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "d = " << c.d << "\n"
      << "n_train = " << c.n_train << "\n"
      << "n_test = " << c.n_test << "\n"
      << "n_trials = " << c.n_trials << "\n"
      << "slab_prob = " << format_double(c.slab_prob) << "\n"
      << "slab_var = " << format_double(c.slab_var) << "\n"
      << "noise_std = " << format_double(c.noise_std) << "\n"
      << "damping_grid = ";
  for (std::size_t i = 0; i < c.damping_grid.size(); ++i) {
    out << (i ? ", " : "") << format_double(c.damping_grid[i]);
  }
  out << "\n"
      << "rep_max_iter = " << c.rep_max_iter << "\n"
      << "eps = " << format_double(c.eps) << "\n"
      << "seed = " << c.seed << "\n"
      << "rep_tol = " << format_double(c.rep_tol) << "\n"
      << "outer_tol = " << format_double(c.outer_tol) << "\n"
      << "inner_tol = " << format_double(c.inner_tol) << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// data generation

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::mt19937_64 stream(std::uint64_t seed, std::size_t trial_id,
                       std::string_view purpose) {
  const std::uint64_t tag = fnv1a(purpose);
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial_id),
                    static_cast<std::uint32_t>(trial_id >> 32),
                    static_cast<std::uint32_t>(tag),
                    static_cast<std::uint32_t>(tag >> 32)};
  return std::mt19937_64(seq);
}

Matrix sphere_rows(std::size_t rows, std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(static_cast<Index>(rows), static_cast<Index>(d));
  for (Index r = 0; r < x.rows(); ++r) {
    double norm = 0.0;
    do {
      for (Index c = 0; c < x.cols(); ++c) x(r, c) = normal(rng);
      norm = x.row(r).norm();
    } while (norm == 0.0);
    x.row(r) /= norm;
  }
  return x;
}

Vector noisy_targets(const Matrix& x, const Vector& w, double noise_std,
                     std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, noise_std);
  Vector y = x * w;
  for (Index j = 0; j < y.size(); ++j) y[j] += noise(rng);
  return y;
}

}  // namespace

TrialData generate_trial(const ExperimentConfig& config, std::size_t trial_id) {
  config.validate();
  auto weight_rng = stream(config.seed, trial_id, "weights");
  std::bernoulli_distribution include(config.slab_prob);
  std::normal_distribution<double> slab(0.0, std::sqrt(config.slab_var));
  Vector w = Vector::Zero(static_cast<Index>(config.d));
  for (Index i = 0; i < w.size(); ++i) {
    const bool on = include(weight_rng);
    const double value = slab(weight_rng);
    if (on) w[i] = value;
  }

  auto train_x_rng = stream(config.seed, trial_id, "train_x");
  auto train_noise_rng = stream(config.seed, trial_id, "train_noise");
  auto test_x_rng = stream(config.seed, trial_id, "test_x");
  auto test_noise_rng = stream(config.seed, trial_id, "test_noise");

  Matrix x_train = sphere_rows(config.n_train, config.d, train_x_rng);
  Vector y_train = noisy_targets(x_train, w, config.noise_std, train_noise_rng);
  Matrix x_test = sphere_rows(config.n_test, config.d, test_x_rng);
  Vector y_test = noisy_targets(x_test, w, config.noise_std, test_noise_rng);

  return TrialData{
      ModelInstance(std::move(x_train), std::move(y_train),
                    config.noise_std * config.noise_std, config.slab_prob,
                    config.slab_var),
      std::move(x_test), std::move(y_test), std::move(w)};
}

double evaluate_mse(const Vector& w_hat, const Matrix& test_x,
                    const Vector& test_y) {
  if (w_hat.size() != test_x.cols() || test_y.size() != test_x.rows()) {
    throw DimensionMismatch("evaluate_mse: shapes do not agree");
  }
  if (test_y.size() == 0) {
    throw std::invalid_argument("evaluate_mse: empty test set");
  }
  return (test_y - test_x * w_hat).squaredNorm() /
         static_cast<double>(test_y.size());
}

// ---------------------------------------------------------------------------
// sweep

namespace {

std::string failure_tag(const std::exception& e) {
  if (dynamic_cast<const DescentViolation*>(&e)) return "descent_violation";
  if (dynamic_cast<const NonKktPoint*>(&e)) return "non_kkt";
  if (dynamic_cast<const NotPositiveDefinite*>(&e)) return "not_positive_definite";
  if (dynamic_cast<const NumericalFailure*>(&e)) return "numerical_failure";
  return "error";
}

}  // namespace

std::vector<TrialRecord> run_trial(const ExperimentConfig& config,
                                   std::size_t trial_id) {
  const TrialData data = generate_trial(config, trial_id);

  TrialRecord pc;
  try {
    const PcepResult r = run_pcep(data.train, config.pcep_options());
    pc.pcep_converged = r.converged;
    pc.mse_pcep = evaluate_mse(r.moments.mean, data.test_x, data.test_y);
    pc.pcep_outer_iterations = r.iterations;
    pc.pcep_energy = r.energy_trace.back();
  } catch (const std::exception& e) {
    pc.pcep_status = failure_tag(e);
    pc.mse_pcep = std::nan("");
    pc.pcep_energy = std::nan("");
  }

  std::vector<TrialRecord> out;
  out.reserve(config.damping_grid.size());
  for (double tau : config.damping_grid) {
    TrialRecord rec = pc;
    rec.trial_id = trial_id;
    rec.damping = tau;
    try {
      const EPResult r = run_rep(data.train, config.rep_options(tau));
      rec.rep_converged = r.converged;
      rec.mse_rep = evaluate_mse(r.moments.mean, data.test_x, data.test_y);
      rec.rep_iterations = r.iterations;
      rec.rep_energy = r.energy_trace.back();
    } catch (const std::exception& e) {
      rec.rep_status = failure_tag(e);
      rec.mse_rep = std::nan("");
      rec.rep_energy = std::nan("");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

namespace {

SweepResult assemble(std::vector<std::vector<TrialRecord>> per_trial) {
  SweepResult res;
  for (auto& trial : per_trial) {
    for (auto& rec : trial) res.records.push_back(std::move(rec));
  }
  res.tables = summarize(res.records);
  return res;
}

}  // namespace

SweepResult run_sweep(const ExperimentConfig& config) {
  config.validate();
  const auto trials = static_cast<std::int64_t>(config.n_trials);
  std::vector<std::vector<TrialRecord>> per_trial(config.n_trials);
  std::exception_ptr failure = nullptr;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t t = 0; t < trials; ++t) {
    try {
      per_trial[static_cast<std::size_t>(t)] =
          run_trial(config, static_cast<std::size_t>(t));
    } catch (...) {
#pragma omp critical
      failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return assemble(std::move(per_trial));
}

SweepResult run_sweep_serial(const ExperimentConfig& config) {
  config.validate();
  std::vector<std::vector<TrialRecord>> per_trial;
  per_trial.reserve(config.n_trials);
  for (std::size_t t = 0; t < config.n_trials; ++t) {
    per_trial.push_back(run_trial(config, t));
  }
  return assemble(std::move(per_trial));
}

namespace {

std::pair<double, double> mean_and_se(const std::vector<double>& xs) {
  if (xs.empty()) return {std::nan(""), std::nan("")};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double k = static_cast<double>(xs.size());
  return {mean, std::sqrt(ss / (k - 1.0) / k)};
}

}  // namespace

SummaryTables summarize(const std::vector<TrialRecord>& records) {
  std::vector<double> grid;
  for (const auto& r : records) {
    if (std::find(grid.begin(), grid.end(), r.damping) == grid.end()) {
      grid.push_back(r.damping);
    }
  }
  std::sort(grid.begin(), grid.end());

  SummaryTables tables;
  for (double tau : grid) {
    std::vector<double> pc[2], rep[2];
    for (const auto& r : records) {
      if (r.damping != tau) continue;
      if (!r.ok()) {
        ++tables.failures;
        continue;
      }
      const int part = r.rep_converged ? 1 : 0;
      pc[part].push_back(r.mse_pcep);
      rep[part].push_back(r.mse_rep);
    }
    for (int part = 0; part < 2; ++part) {
      SummaryRow row;
      row.damping = tau;
      row.count = pc[part].size();
      std::tie(row.pcep_mean, row.pcep_se) = mean_and_se(pc[part]);
      std::tie(row.rep_mean, row.rep_se) = mean_and_se(rep[part]);
      (part ? tables.converged : tables.not_converged).push_back(row);
    }
  }
  return tables;
}

// ---------------------------------------------------------------------------
// CSV and tables

namespace {

constexpr std::string_view kCsvHeader =
    "trial_id,tau,method,converged,mse,iterations,final_energy,status";

}  // namespace

std::string results_csv(const std::vector<TrialRecord>& records) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : records) {
    const std::string tau = format_double(r.damping);
    out += std::to_string(r.trial_id) + "," + tau + ",rep," +
           (r.rep_converged ? "1" : "0") + "," + format_double(r.mse_rep) +
           "," + std::to_string(r.rep_iterations) + "," +
           format_double(r.rep_energy) + "," + r.rep_status + "\n";
    out += std::to_string(r.trial_id) + "," + tau + ",pcep," +
           (r.pcep_converged ? "1" : "0") + "," + format_double(r.mse_pcep) +
           "," + std::to_string(r.pcep_outer_iterations) + "," +
           format_double(r.pcep_energy) + "," + r.pcep_status + "\n";
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_csv_double(const std::string& s, const std::string& where) {
  if (s == "nan" || s == "-nan") return std::nan("");
  return parse_number<double>(s, where);
}

}  // namespace

std::vector<TrialRecord> parse_results_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || trim(line) != kCsvHeader) {
    throw std::invalid_argument("results csv: missing or unexpected header");
  }
  std::map<std::pair<std::size_t, double>, TrialRecord> by_key;
  std::vector<std::pair<std::size_t, double>> order;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = "results csv line " + std::to_string(lineno);
    const auto f = split_csv_line(line);
    if (f.size() != 8) throw std::invalid_argument(where + ": expected 8 fields");
    const auto trial = parse_number<std::size_t>(f[0], where);
    const double tau = parse_csv_double(f[1], where);
    const auto key = std::make_pair(trial, tau);
    auto [it, inserted] = by_key.try_emplace(key);
    if (inserted) order.push_back(key);
    TrialRecord& r = it->second;
    r.trial_id = trial;
    r.damping = tau;
    const bool conv = f[3] == "1";
    const double mse = parse_csv_double(f[4], where);
    const auto iters = parse_number<std::size_t>(f[5], where);
    const double energy = parse_csv_double(f[6], where);
    if (f[2] == "rep") {
      r.rep_converged = conv;
      r.mse_rep = mse;
      r.rep_iterations = iters;
      r.rep_energy = energy;
      r.rep_status = f[7];
    } else if (f[2] == "pcep") {
      r.pcep_converged = conv;
      r.mse_pcep = mse;
      r.pcep_outer_iterations = iters;
      r.pcep_energy = energy;
      r.pcep_status = f[7];
    } else {
      throw std::invalid_argument(where + ": unknown method '" + f[2] + "'");
    }
  }
  std::vector<TrialRecord> out;
  out.reserve(order.size());
  for (const auto& key : order) out.push_back(by_key.at(key));
  return out;
}

namespace {

std::string fixed(double x, int digits) {
  if (std::isnan(x)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
  return buf;
}

std::string cell(double mean, double se) {
  if (std::isnan(mean)) return "n/a";
  return fixed(mean, 4) + " ± " + fixed(se, 4);
}

void markdown_table(std::ostringstream& out, const std::string& title,
                    const std::vector<SummaryRow>& rows) {
  out << "### " << title << "\n\n"
      << "| PC-EP | R-EP | tau | # sets |\n"
      << "|---:|---:|---:|---:|\n";
  for (const auto& r : rows) {
    out << "| " << cell(r.pcep_mean, r.pcep_se) << " | "
        << cell(r.rep_mean, r.rep_se) << " | " << fixed(r.damping, 1) << " | "
        << r.count << " |\n";
  }
  out << "\n";
}

}  // namespace

std::string tables_markdown(const SummaryTables& tables) {
  std::ostringstream out;
  out << "## Test MSE by R-EP convergence\n\n";
  markdown_table(out, "R-EP does not converge", tables.not_converged);
  markdown_table(out, "R-EP converges", tables.converged);
  out << "Entries are mean test MSE ± standard error of the mean. "
      << "Failed runs excluded: " << tables.failures << ".\n";
  return out.str();
}

std::string tables_csv(const SummaryTables& tables) {
  std::string out = "partition,tau,count,pcep_mean,pcep_se,rep_mean,rep_se\n";
  auto emit = [&](const char* name, const std::vector<SummaryRow>& rows) {
    for (const auto& r : rows) {
      out += std::string(name) + "," + format_double(r.damping) + "," +
             std::to_string(r.count) + "," + format_double(r.pcep_mean) + "," +
             format_double(r.pcep_se) + "," + format_double(r.rep_mean) + "," +
             format_double(r.rep_se) + "\n";
    }
  };
  emit("not_converged", tables.not_converged);
  emit("converged", tables.converged);
  return out;
}

}  // namespace ssep

#include "ssep/tilted.hpp"

#include <cmath>
#include <stdexcept>

#include "ssep/errors.hpp"

namespace ssep {

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

namespace {

void check_domain(double cav_1, double cav_2, double slab_prob,
                  double slab_var) {
  if (!std::isfinite(cav_1) || !std::isfinite(cav_2) || !(cav_2 > 0.0)) {
    throw std::invalid_argument("tilted: cavity precision must be positive");
  }
  if (!(slab_prob > 0.0 && slab_prob < 1.0)) {
    throw std::invalid_argument("tilted: slab probability must be in (0, 1)");
  }
  if (!(slab_var > 0.0) || !std::isfinite(slab_var)) {
    throw std::invalid_argument("tilted: slab variance must be positive");
  }
}

// -1/2 log(c2) - 1/2 log(1/c2 + v) + c1^2/(2 c2^2) [c2 - (1/c2 + v)^-1]
// rearranged to avoid the 1/c2^2 blow-up.
double slab_log_ratio(double c1, double c2, double v) {
  const double k = 1.0 + c2 * v;
  return -0.5 * std::log1p(c2 * v) + 0.5 * c1 * c1 * v / k;
}

}  // namespace

TiltedTerms tilted_terms(double cav_1, double cav_2, double slab_prob,
                         double slab_var) {
  check_domain(cav_1, cav_2, slab_prob, slab_var);
  TiltedTerms t;
  t.log_odds = std::log(slab_prob) - std::log1p(-slab_prob);
  t.log_ratio = slab_log_ratio(cav_1, cav_2, slab_var);
  const double r = logistic(t.log_ratio + t.log_odds);
  const double q = logistic(-t.log_ratio - t.log_odds);
  const double k = 1.0 + cav_2 * slab_var;
  t.a = r * cav_1 / k + q * cav_1;
  t.b = r * (cav_1 * cav_1 - cav_2 - cav_2 * cav_2 * slab_var) / (k * k) +
        q * (cav_1 * cav_1 - cav_2);
  return t;
}

TiltedMoments tilted_moments(double cav_1, double cav_2, double slab_prob,
                             double slab_var) {
  check_domain(cav_1, cav_2, slab_prob, slab_var);
  const double rho = std::log(slab_prob) - std::log1p(-slab_prob);
  const double log_ratio = slab_log_ratio(cav_1, cav_2, slab_var);

  const double slab_post_var = slab_var / (1.0 + cav_2 * slab_var);
  const double slab_post_mean = cav_1 * slab_post_var;

  TiltedMoments m;
  m.slab_responsibility = logistic(log_ratio + rho);
  m.mean = m.slab_responsibility * slab_post_mean;
  m.second_moment = m.slab_responsibility *
                    (slab_post_var + slab_post_mean * slab_post_mean);
  // log[(1-p) + p e^{log_ratio}] = log(1-p) + log(1 + e^{log_ratio + rho})
  m.log_partition = std::log1p(-slab_prob) + softplus(log_ratio + rho);

  if (!std::isfinite(m.mean) || !std::isfinite(m.second_moment) ||
      !std::isfinite(m.log_partition)) {
    throw NumericalFailure("tilted_moments: non-finite result");
  }
  return m;
}

double log_Z_hat(const NaturalTuple& cavity, const ModelInstance& model) {
  if (cavity.size() != model.d()) {
    throw DimensionMismatch("log_Z_hat: cavity size does not match d");
  }
  double total = 0.0;
  for (Index i = 0; i < cavity.size(); ++i) {
    total += tilted_moments(cavity.first[i], cavity.second[i],
                            model.slab_prob(), model.slab_var())
                 .log_partition;
  }
  return total;
}

}  // namespace ssep

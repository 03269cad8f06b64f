#include "ssep/energy.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "ssep/errors.hpp"
#include "ssep/tilted.hpp"

namespace ssep {

namespace {

double log_Z_tilde_unchecked(const NaturalTuple& v) {
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  double total = 0.0;
  for (Index i = 0; i < v.size(); ++i) {
    total += half_log_2pi - 0.5 * std::log(v.second[i]) +
             0.5 * v.first[i] * v.first[i] / v.second[i];
  }
  return total;
}

}  // namespace

double log_Z_tilde(const NaturalTuple& marginal, double eps) {
  require_admissible(marginal, TupleRole::marginal, eps);
  return log_Z_tilde_unchecked(marginal);
}

EnergyBreakdown energy_unchecked(const ModelInstance& model,
                                 const NaturalTuple& marginal,
                                 const NaturalTuple& cavity,
                                 const NaturalTuple& site) {
  EnergyBreakdown e;
  e.neg_log_Z = -log_Z(model, site);
  e.neg_log_Z_hat = -log_Z_hat(cavity, model);
  e.log_Z_tilde = log_Z_tilde_unchecked(marginal);
  e.total = e.neg_log_Z + e.neg_log_Z_hat + e.log_Z_tilde;
  return e;
}

EnergyBreakdown energy(const ModelInstance& model, const NaturalTuple& marginal,
                       const NaturalTuple& site, double eps) {
  if (marginal.size() != model.d() || site.size() != model.d()) {
    throw DimensionMismatch("energy: tuple sizes must equal d");
  }
  NaturalTuple cavity = marginal - site;
  require_admissible(site, TupleRole::site, eps);
  require_admissible(cavity, TupleRole::cavity, eps);
  require_admissible(marginal, TupleRole::marginal, eps);
  return energy_unchecked(model, marginal, cavity, site);
}

EnergyBreakdown energy(const ModelInstance& model, const NaturalTuple& marginal,
                       const NaturalTuple& cavity, const NaturalTuple& site,
                       double eps) {
  if (marginal.size() != model.d() || site.size() != model.d() ||
      cavity.size() != model.d()) {
    throw DimensionMismatch("energy: tuple sizes must equal d");
  }
  const double gap = sup_distance(marginal, site + cavity);
  if (!(gap <= 1e-10)) {
    throw ConstraintViolation(
        ConstraintKind::equality,
        "energy: marginal differs from site + cavity by " + std::to_string(gap));
  }
  require_admissible(site, TupleRole::site, eps);
  require_admissible(cavity, TupleRole::cavity, eps);
  require_admissible(marginal, TupleRole::marginal, eps);
  return energy_unchecked(model, marginal, cavity, site);
}

double lower_bound(std::size_t n, std::size_t d, double noise_var) {
  if (n < 1 || d < 1) {
    throw std::invalid_argument("lower_bound: n and d must be at least 1");
  }
  if (!(noise_var > 0.0)) {
    throw std::invalid_argument("lower_bound: noise variance must be positive");
  }
  return 0.5 * static_cast<double>(n) *
             std::log(2.0 * std::numbers::pi * noise_var) -
         0.5 * static_cast<double>(d) * std::numbers::ln2;
}

}  // namespace ssep

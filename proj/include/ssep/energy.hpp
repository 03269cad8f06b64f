#pragma once

#include <cstddef>

#include "ssep/model.hpp"
#include "ssep/natural.hpp"

namespace ssep {

/// E(v, cavity, site) = -log Z(site) - log Zhat(cavity) + log Ztilde(v).
struct EnergyBreakdown {
  double neg_log_Z = 0.0;
  double neg_log_Z_hat = 0.0;
  double log_Z_tilde = 0.0;
  double total = 0.0;
};

// sum_i [log(2 pi)/2 - log(v2_i)/2 + v1_i^2 / (2 v2_i)]. Requires v2 >= 3 eps.
double log_Z_tilde(const NaturalTuple& marginal, double eps = kDefaultEps);

// Energy with the cavity derived as marginal - site, so the coupling
// v = site + cavity holds by construction. Checks the inequality
// constraints (site, cavity >= eps; marginal >= 3 eps).
EnergyBreakdown energy(const ModelInstance& model, const NaturalTuple& marginal,
                       const NaturalTuple& site, double eps = kDefaultEps);

// Three-tuple form. Also checks marginal == site + cavity to 1e-10 and
// reports an equality breach separately from an inequality breach.
EnergyBreakdown energy(const ModelInstance& model, const NaturalTuple& marginal,
                       const NaturalTuple& cavity, const NaturalTuple& site,
                       double eps);

// No admissibility checks; only needs positive precisions. Used for
// diagnostic traces where a clamp may have left the triple slightly outside
// the constraint set.
EnergyBreakdown energy_unchecked(const ModelInstance& model,
                                 const NaturalTuple& marginal,
                                 const NaturalTuple& cavity,
                                 const NaturalTuple& site);

// (n/2) log(2 pi s2) - (d/2) log 2: lower bound of the constrained energy.
double lower_bound(std::size_t n, std::size_t d, double noise_var);

}  // namespace ssep

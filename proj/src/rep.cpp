#include "ssep/rep.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "ssep/energy.hpp"
#include "ssep/errors.hpp"

namespace ssep {

double site_change(const NaturalTuple& before, const NaturalTuple& after) {
  if (before.size() != after.size()) {
    throw DimensionMismatch("site_change: size mismatch");
  }
  double sup = 0.0;
  for (Index i = 0; i < before.size(); ++i) {
    sup = std::max(sup, std::abs(after.first[i] - before.first[i]) /
                            (1.0 + std::abs(before.first[i])));
    sup = std::max(sup, std::abs(after.second[i] - before.second[i]) /
                            (1.0 + std::abs(before.second[i])));
  }
  return sup;
}

std::pair<double, double> cavity_at(Index i, const NaturalTuple& site,
                                    const PosteriorMoments& moments,
                                    double eps) {
  const double marg_prec = 1.0 / moments.marg_var[i];
  const double cav_2 = std::max(marg_prec - site.second[i], eps);
  const double cav_1 = moments.mean[i] * marg_prec - site.first[i];
  return {cav_1, cav_2};
}

namespace {

void check_damping(double damping) {
  if (!(damping >= 0.0 && damping <= 1.0)) {
    throw std::invalid_argument("damping must lie in [0, 1]");
  }
}

std::pair<double, double> updated_site(Index i, const NaturalTuple& site,
                                       const PosteriorMoments& moments,
                                       const ModelInstance& model,
                                       double damping, double eps) {
  const auto [cav_1, cav_2] = cavity_at(i, site, moments, eps);
  const TiltedMoments t =
      tilted_moments(cav_1, cav_2, model.slab_prob(), model.slab_var());
  const double var = t.variance();
  if (!(var > 0.0) || !std::isfinite(var)) {
    throw NumericalFailure("rep_site_update: tilted variance " +
                           std::to_string(var) + " at site " +
                           std::to_string(i));
  }
  const double new_2 = std::max(1.0 / var - cav_2, eps);
  const double new_1 = t.mean / var - cav_1;
  return {damping * new_1 + (1.0 - damping) * site.first[i],
          damping * new_2 + (1.0 - damping) * site.second[i]};
}

}  // namespace

NaturalTuple rep_site_update(Index i, const NaturalTuple& site,
                             const PosteriorMoments& moments,
                             const ModelInstance& model, double damping,
                             double eps) {
  check_damping(damping);
  if (i < 0 || i >= site.size()) {
    throw std::out_of_range("rep_site_update: site index out of range");
  }
  NaturalTuple out = site;
  std::tie(out.first[i], out.second[i]) =
      updated_site(i, site, moments, model, damping, eps);
  return out;
}

NaturalTuple rep_sweep(const NaturalTuple& site, const PosteriorMoments& moments,
                       const ModelInstance& model, double damping, double eps) {
  check_damping(damping);
  if (site.size() != model.d() || moments.mean.size() != model.d()) {
    throw DimensionMismatch("rep_sweep: sizes do not match d");
  }
  NaturalTuple out = site;
  for (Index i = 0; i < site.size(); ++i) {
    std::tie(out.first[i], out.second[i]) =
        updated_site(i, site, moments, model, damping, eps);
  }
  return out;
}

NaturalTuple initial_site(const ModelInstance& model) {
  return NaturalTuple::constant(model.d(), 0.0, 1.0 / model.slab_var());
}

namespace {

// Marginal and cavity tuples implied by a site and the moments of Q, with
// the cavity precision clamped the same way the updates clamp it.
std::pair<NaturalTuple, NaturalTuple> implied_tuples(
    const NaturalTuple& site, const PosteriorMoments& moments, double eps) {
  NaturalTuple cavity = NaturalTuple::constant(site.size(), 0.0, 0.0);
  for (Index i = 0; i < site.size(); ++i) {
    std::tie(cavity.first[i], cavity.second[i]) =
        cavity_at(i, site, moments, eps);
  }
  NaturalTuple marginal = site + cavity;
  return {std::move(marginal), std::move(cavity)};
}

}  // namespace

double log_evidence(const ModelInstance& model, const NaturalTuple& marginal,
                    const NaturalTuple& site) {
  const NaturalTuple cavity = marginal - site;
  return -energy_unchecked(model, marginal, cavity, site).total;
}

EPResult run_rep(const ModelInstance& model, const RepOptions& options,
                 const std::optional<NaturalTuple>& start) {
  if (!(options.damping > 0.0 && options.damping <= 1.0)) {
    throw std::invalid_argument("run_rep: damping must lie in (0, 1]");
  }
  if (options.max_iter < 1 || !(options.tol > 0.0) || !(options.eps > 0.0)) {
    throw std::invalid_argument("run_rep: max_iter, tol and eps must be positive");
  }
  EPResult res;
  res.site = start ? *start : initial_site(model);
  if (res.site.size() != model.d()) {
    throw DimensionMismatch("run_rep: start site has wrong size");
  }
  res.site.second = res.site.second.cwiseMax(options.eps);
  res.moments = posterior_moments(model, res.site);

  for (res.iterations = 0; res.iterations < options.max_iter;) {
    NaturalTuple next =
        rep_sweep(res.site, res.moments, model, options.damping, options.eps);
    res.max_delta = site_change(res.site, next);
    res.site = std::move(next);
    res.moments = posterior_moments(model, res.site);
    ++res.iterations;

    const auto [marginal, cavity] =
        implied_tuples(res.site, res.moments, options.eps);
    res.energy_trace.push_back(
        energy_unchecked(model, marginal, cavity, res.site).total);

    if (res.max_delta < options.tol) {
      res.converged = true;
      break;
    }
  }
  res.log_evidence = -res.energy_trace.back();
  return res;
}

}  // namespace ssep

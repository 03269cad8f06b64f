#pragma once

#include <cstddef>
#include <optional>

#include "ssep/ep_result.hpp"
#include "ssep/model.hpp"
#include "ssep/natural.hpp"
#include "ssep/tilted.hpp"

namespace ssep {

struct RepOptions {
  double damping = 0.5;
  std::size_t max_iter = 1000;
  // Convergence threshold on the sweep change measure, see site_change().
  double tol = 1e-6;
  double eps = kDefaultEps;
};

// Sup over sites of |delta first| / (1 + |first|) and
// |delta second| / (1 + |second|).
double site_change(const NaturalTuple& before, const NaturalTuple& after);

/// Cavity of site i given the current Gaussian approximation:
/// second = 1/marg_var_i - site2_i (clamped to >= eps),
/// first = mean_i/marg_var_i - site1_i.
std::pair<double, double> cavity_at(Index i, const NaturalTuple& site,
                                    const PosteriorMoments& moments, double eps);

/// One damped EP update of site i. The new site is moment matched to the
/// tilted distribution, its precision clamped to >= eps, and combined with
/// the old one as tau * new + (1 - tau) * old in natural parameters.
/// Returns the whole site tuple with entry i replaced.
NaturalTuple rep_site_update(Index i, const NaturalTuple& site,
                             const PosteriorMoments& moments,
                             const ModelInstance& model, double damping,
                             double eps = kDefaultEps);

// All d site updates against the same moments.
NaturalTuple rep_sweep(const NaturalTuple& site, const PosteriorMoments& moments,
                       const ModelInstance& model, double damping,
                       double eps = kDefaultEps);

// Sites at the prior-matched start: first = 0, second = 1 / slab_var.
NaturalTuple initial_site(const ModelInstance& model);

/// Sequential damped EP. Sweeps the sites in ascending order against the
/// moments of the previous sweep, refactors once per sweep, and records the
/// EP energy after every sweep.
EPResult run_rep(const ModelInstance& model, const RepOptions& options,
                 const std::optional<NaturalTuple>& start = std::nullopt);

// Log site scales making Q a normalized evidence approximation:
// z_i = log Zhat_i(cavity_i) - log(2 pi / v2_i)/2 - v1_i^2 / (2 v2_i).
double log_evidence(const ModelInstance& model, const NaturalTuple& marginal,
                    const NaturalTuple& site);

}  // namespace ssep

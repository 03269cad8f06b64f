#pragma once

#include <cstddef>
#include <vector>

#include "ssep/ep_result.hpp"
#include "ssep/model.hpp"
#include "ssep/natural.hpp"
#include "ssep/tilted.hpp"

namespace ssep {

/// Lagrange multipliers of the inner problem: lambda for the coupling
/// v = site + cavity, mu_1 for cavity2 >= eps and mu_2 for site2 >= eps.
struct Multipliers {
  Vector lambda_1;
  Vector lambda_2;
  Vector mu_1;
  Vector mu_2;
};

enum class ActiveBound : unsigned char { none, site_at_eps, cavity_at_eps };

enum class InnerMethod {
  newton,  // projected Newton with the exact Hessian
  lbfgs,   // projected L-BFGS with 2x2 block-diagonal curvature seeding
};

struct InnerOptions {
  double eps = kDefaultEps;
  double tol = 1e-8;
  std::size_t max_iters = 500;
  InnerMethod method = InnerMethod::newton;
  // Newton only: largest model-predicted gain left at termination. Far along
  // a run the site precisions grow and the curvature in their direction
  // shrinks, so the gradient test alone leaves value errors that swamp the
  // outer energy decrease.
  double gain_tol = 1e-12;
};

/// Maximizer of E(v, v - site, site) over the site parameters for a fixed
/// marginal v, with everything the multiplier step needs.
struct InnerSolution {
  NaturalTuple site_star;
  NaturalTuple cavity_star;
  double inner_value = 0.0;
  std::vector<ActiveBound> active_set;

  PosteriorMoments moments;           // moments of Q at site_star
  std::vector<TiltedMoments> tilted;  // P moments at cavity_star
  std::size_t iterations = 0;
  double projected_gradient = 0.0;
  // The optimizer stopped on its iteration cap or a failed line search.
  bool degraded = false;
};

/// Inner concave maximization with eps <= site2 <= v2 - eps and free site1,
/// solved on the site tuple alone (the cavity is v - site). The gradient is
/// (E_P[w] - E_Q[w], (E_Q[w^2] - E_P[w^2]) / 2) per site; the negated
/// Hessian is the covariance of (w, -w^2/2) under Q plus the per-site
/// covariance under P.
InnerSolution inner_maximize(const ModelInstance& model,
                             const NaturalTuple& marginal,
                             const NaturalTuple& warm_start,
                             const InnerOptions& options = {});

// Gradient of the inner objective at a site tuple, for checking first-order
// conditions independently of the optimizer. Layout matches the tuple.
NaturalTuple inner_gradient(const ModelInstance& model,
                            const NaturalTuple& marginal,
                            const NaturalTuple& site);

/// Reads lambda and mu off the stationarity conditions. lambda_1 = -E_Q[w];
/// lambda_2 = E_P[w^2]/2 when the site bound is active, E_Q[w^2]/2
/// otherwise; the remaining mu follow from the same equations. Throws
/// NonKktPoint when a recovered mu exceeds kkt_tol.
Multipliers extract_multipliers(const InnerSolution& sol,
                                const ModelInstance& model,
                                double kkt_tol = 1e-8);

/// Closed-form outer step: v2 = 1 / (2 lambda_2 - lambda_1^2) raised to 3 eps
/// where smaller, v1 = -lambda_1 v2. Throws NumericalFailure when
/// 2 lambda_2 - lambda_1^2 <= 0 (the outer problem has no minimizer then).
NaturalTuple outer_update(const Multipliers& mult, double eps = kDefaultEps);

struct PcepOptions {
  double eps = kDefaultEps;
  double outer_tol = 1e-8;
  std::size_t max_outer = 200;
  double inner_tol = 1e-8;
  std::size_t inner_max_iters = 500;
  InnerMethod inner_method = InnerMethod::newton;
  double inner_gain_tol = 1e-12;
  double inner_tol_floor = 1e-10;
  // Allowed energy increase per outer step, relative to 1 + |E|.
  double descent_slack = 1e-8;
  // When positive, convergence is declared on the relative change of the
  // marginal (see site_change) instead of the energy decrease. The energy
  // stops resolving the iterate long before the marginal settles when some
  // site precisions are very large.
  double marginal_tol = 0.0;
};

struct PcepResult : EPResult {
  NaturalTuple marginal;
  NaturalTuple cavity;
  std::vector<ActiveBound> active_set;
  std::size_t inner_iterations = 0;
  std::size_t degraded_inner_solves = 0;
};

// v2 = 2 / slab_var, v1 = 0.
NaturalTuple initial_marginal(const ModelInstance& model);

/// Double-loop EP. Alternates the inner maximization, multiplier extraction
/// and outer update until the energy decrease drops below outer_tol, or the
/// marginal change below marginal_tol when that is set.
/// Throws DescentViolation if an outer step raises the energy by more than
/// the slack.
PcepResult run_pcep(const ModelInstance& model, const PcepOptions& options = {});

}  // namespace ssep

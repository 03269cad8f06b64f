#pragma once

#include "ssep/model.hpp"
#include "ssep/natural.hpp"

namespace ssep {

/// Moments of the one-dimensional tilted distribution
///   P(w) ∝ exp{c1 w - c2 w^2 / 2} [p N(w | 0, v) + (1 - p) delta(w)].
struct TiltedMoments {
  double mean = 0.0;
  double second_moment = 0.0;
  // log of the integral of exp{c1 w - c2 w^2 / 2} [p N(w|0,v) + (1-p) delta(w)]
  double log_partition = 0.0;
  // posterior weight of the slab component
  double slab_responsibility = 0.0;

  double variance() const { return second_moment - mean * mean; }
};

// The intermediate quantities p_i, a_i, b_i of the classic spike-and-slab EP
// update, with rho the prior log-odds. mean = (c1 - a) / c2 and
// second_moment = 1/c2 - (a^2 - b)/c2^2 + mean^2.
struct TiltedTerms {
  double log_ratio = 0.0;  // p_i: log slab evidence minus log spike evidence
  double a = 0.0;
  double b = 0.0;
  double log_odds = 0.0;  // rho
};

// Numerically stable logistic and log(1 + e^x).
double logistic(double x);
double softplus(double x);

TiltedTerms tilted_terms(double cav_1, double cav_2, double slab_prob,
                         double slab_var);

/// Analytic tilted moments. Requires cav_2 > 0, 0 < slab_prob < 1,
/// slab_var > 0; throws std::invalid_argument otherwise and
/// NumericalFailure on a non-finite result.
///
/// The moments are evaluated from the two-component form (a point mass at
/// zero plus the slab posterior N(c1 V, V), V = v / (1 + c2 v)), which is
/// algebraically identical to the (a, b) expressions but free of the 1/c2
/// cancellation when c2 is tiny.
TiltedMoments tilted_moments(double cav_1, double cav_2, double slab_prob,
                             double slab_var);

// Sum over sites of the per-site log partition.
double log_Z_hat(const NaturalTuple& cavity, const ModelInstance& model);

}  // namespace ssep

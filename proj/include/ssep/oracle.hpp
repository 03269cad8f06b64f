#pragma once

#include <cstddef>

#include "ssep/model.hpp"

namespace ssep {

/// Exact posterior summaries of the spike-and-slab regression, by
/// enumeration of all 2^d inclusion patterns.
struct ExactPosterior {
  Vector mean;
  Vector marg_var;
  double log_evidence = 0.0;
  Vector inclusion_prob;
};

inline constexpr std::size_t kDefaultMaxEnumerationDim = 15;

/// Each pattern z contributes a Gaussian conditional posterior on the
/// included coefficients with weight p^|z| (1-p)^(d-|z|) N(y | 0, s2 I +
/// v X_z X_z'). Patterns are evaluated in parallel and reduced in pattern
/// order, so the result does not depend on the thread count.
/// Throws std::invalid_argument when d > max_d.
ExactPosterior exact_posterior(const ModelInstance& model,
                               std::size_t max_d = kDefaultMaxEnumerationDim);

// Single-threaded reference with a streaming reduction.
ExactPosterior exact_posterior_serial(
    const ModelInstance& model, std::size_t max_d = kDefaultMaxEnumerationDim);

}  // namespace ssep

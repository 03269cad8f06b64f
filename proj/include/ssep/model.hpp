#pragma once

#include "ssep/natural.hpp"

namespace ssep {

/// Linear regression y = Xw + noise with an independent spike-and-slab prior
/// p N(w_i | 0, v) + (1 - p) delta(w_i) on every coefficient.
///
/// Immutable after construction. The constructor validates shapes and
/// hyperparameters and caches X'X / sigma^2, X'y / sigma^2 and y'y.
class ModelInstance {
 public:
  // Slab probabilities are clamped into [kMinSlabProb, 1 - kMinSlabProb] so
  // that the prior log-odds stay finite; exactly 0 or 1 is rejected.
  static constexpr double kMinSlabProb = 1e-12;

  ModelInstance(Matrix design, Vector targets, double noise_var,
                double slab_prob, double slab_var);

  Index n() const { return design_.rows(); }
  Index d() const { return design_.cols(); }

  const Matrix& design() const { return design_; }
  const Vector& targets() const { return targets_; }
  double noise_var() const { return noise_var_; }
  double slab_prob() const { return slab_prob_; }
  double slab_var() const { return slab_var_; }
  // log(p) - log(1 - p)
  double slab_log_odds() const { return slab_log_odds_; }

  const Matrix& scaled_gram() const { return scaled_gram_; }
  const Vector& scaled_xty() const { return scaled_xty_; }
  double yty() const { return yty_; }

 private:
  Matrix design_;
  Vector targets_;
  double noise_var_;
  double slab_prob_;
  double slab_var_;
  double slab_log_odds_;
  Matrix scaled_gram_;
  Vector scaled_xty_;
  double yty_;
};

/// Moments of the Gaussian approximation Q(w) = N(y | Xw, s2 I) prod_i
/// exp{site1_i w_i - site2_i w_i^2 / 2}, normalized: N(w | mean, A^-1) with
/// A = X'X / s2 + diag(site2).
struct PosteriorMoments {
  Vector mean;
  Vector marg_var;  // diag(A^-1)
  double log_det_A = 0.0;
  // Exponent pieces of log Z: -y'y / (2 s2) + b' A^-1 b / 2 with
  // b = site1 + X'y / s2, evaluated in residual form at w = mean.
  double quadratic_term = 0.0;
};

// Below this dimension the d x d factorization is cheap, and it stays
// accurate when some site precisions sit at eps; the Woodbury form then
// subtracts nearly equal terms of size 1/eps.
inline constexpr Index kWoodburyMinDim = 64;

enum class SolvePath {
  automatic,  // woodbury when n < d and d >= kWoodburyMinDim, else direct
  direct,     // d x d Cholesky of A
  woodbury,   // n x n Cholesky of s2 I + X diag(1/site2) X'
};

SolvePath resolve_path(const ModelInstance& model, SolvePath path);

// Throws ConstraintViolation if a site precision is not strictly positive,
// NotPositiveDefinite if the factorization fails.
PosteriorMoments posterior_moments(const ModelInstance& model,
                                   const NaturalTuple& site,
                                   SolvePath path = SolvePath::automatic);

// Full covariance A^-1 (d x d). Same preconditions as posterior_moments.
Matrix posterior_covariance(const ModelInstance& model, const NaturalTuple& site,
                            SolvePath path = SolvePath::automatic);

// log of the integral of N(y | Xw, s2 I) prod_i exp{site1_i w - site2_i w^2/2}.
double log_Z(const ModelInstance& model, const NaturalTuple& site,
             SolvePath path = SolvePath::automatic);

// Same value from already computed moments.
double log_Z(const ModelInstance& model, const PosteriorMoments& moments);

}  // namespace ssep

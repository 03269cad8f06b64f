#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "ssep/natural.hpp"
#include "ssep/projected_lbfgs.hpp"

namespace ssep {

struct NewtonEvaluation {
  double value = 0.0;
  Vector gradient;
  Matrix hessian;  // only filled when requested
};

// Second argument: whether the Hessian is needed at this point.
using NewtonObjective = std::function<NewtonEvaluation(const Vector&, bool)>;

struct NewtonOptions {
  double tol = 1e-8;  // sup-norm of the projected gradient
  std::size_t max_iters = 500;
  double armijo = 1e-4;
  std::size_t max_backtracks = 50;
  // Largest width of the band next to a bound inside which a variable that
  // the gradient pushes outward is treated as fixed.
  double binding_width = 1e-3;
  // When positive, convergence also requires the decrease predicted by the
  // Newton model for the next step to be at most gain_tol. A small gradient
  // alone can leave a large value gap along directions of tiny curvature.
  double gain_tol = 0.0;
};

/// Two-metric projected Newton method for a convex objective on a box.
/// Steps are accepted on the Armijo value test or on the gradient
/// certificate described for LbfgsOptions::convex.
/// Variables held at a bound by the gradient take a diagonally scaled
/// gradient step; the rest take a Newton step from the Jacobi-scaled
/// Hessian block, regularized when it is not numerically positive definite.
/// Reports results in the same form as minimize_box.
LbfgsResult minimize_box_newton(const NewtonObjective& objective,
                                const Vector& x0, const Vector& lower,
                                const Vector& upper,
                                const NewtonOptions& options = {});

}  // namespace ssep
